#include <benchmark/benchmark.h>

#include <sstream>

#include "amlprof/clustering.hpp"
#include "amlprof/ingest.hpp"
#include "amlprof/profiling.hpp"
#include "amlprof/rules.hpp"
#include "amlprof/synthgen.hpp"
#include "amlprof/tree.hpp"

using namespace amlprof;

namespace {

struct Corpus {
  std::vector<TransactionRecord> txns;
  std::vector<CustomerRecord> reg;
  std::vector<int> truth;
  DateRange window;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus out;
    const auto gen = bundled_config("seven", 2000);
    out.window = gen.window;
    generate(gen, [&](GeneratedCustomer&& g) {
      out.txns.insert(out.txns.end(), g.transactions.begin(), g.transactions.end());
      out.reg.push_back(g.record);
      out.truth.push_back(g.archetype);
    });
    return out;
  }();
  return c;
}

const ProfileTable& profiles() {
  static const ProfileTable t = [] {
    ProfileAccumulator acc(ProfilePhase::phase2, corpus().window);
    for (const auto& r : corpus().txns) acc.add(r);
    auto table = acc.finish(corpus().reg);
    for (std::size_t i = 0; i < table.profiles.size(); ++i) table.profiles[i].label = corpus().truth[i];
    return table;
  }();
  return t;
}

void BM_ParseTransactions(benchmark::State& state) {
  std::ostringstream out;
  write_transactions_csv(out, corpus().txns);
  const std::string text = out.str();
  for (auto _ : state) {
    std::istringstream in(text);
    std::size_t n = 0;
    parse_transactions(in, {}, {}, [&](const TransactionRecord&) { ++n; });
    benchmark::DoNotOptimize(n);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * corpus().txns.size()));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseTransactions)->Unit(benchmark::kMillisecond);

void BM_Profile(benchmark::State& state) {
  for (auto _ : state) {
    ProfileAccumulator acc(ProfilePhase::phase2, corpus().window);
    for (const auto& r : corpus().txns) acc.add(r);
    benchmark::DoNotOptimize(acc.finish(corpus().reg));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * corpus().txns.size()));
}
BENCHMARK(BM_Profile)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  const Matrix raw = profiles().matrix();
  KMeansParams p;
  p.k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_fit(raw, profiles().schema, p));
}
BENCHMARK(BM_KMeans)->Arg(2)->Arg(7)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Induce(benchmark::State& state) {
  const auto data = Instances::from_table(profiles(), 7);
  InductionParams p;
  p.min_instances = 2;
  const auto alg = static_cast<Algorithm>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(induce(alg, data, p));
  state.SetLabel(std::string(to_string(alg)));
}
BENCHMARK(BM_Induce)
    ->Arg(static_cast<int>(Algorithm::j48))
    ->Arg(static_cast<int>(Algorithm::part))
    ->Arg(static_cast<int>(Algorithm::jrip))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
