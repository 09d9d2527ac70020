#include "amlprof/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

namespace amlprof::csv {

LineReader::LineReader(std::istream& in, std::size_t buffer_size) : in_(in), buf_(buffer_size) {}

bool LineReader::refill() {
  if (eof_) return false;
  in_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  end_ = static_cast<std::size_t>(in_.gcount());
  begin_ = 0;
  if (end_ == 0) eof_ = true;
  return end_ > 0;
}

bool LineReader::next(std::string_view& line) {
  carry_.clear();
  bool have_partial = false;
  for (;;) {
    if (begin_ >= end_ && !refill()) {
      if (!have_partial) return false;
      ++line_no_;
      if (!carry_.empty() && carry_.back() == '\r') carry_.pop_back();
      line = carry_;
      return true;
    }
    const char* start = buf_.data() + begin_;
    const auto* nl = static_cast<const char*>(std::memchr(start, '\n', end_ - begin_));
    if (nl == nullptr) {
      carry_.append(start, end_ - begin_);
      have_partial = true;
      begin_ = end_;
      continue;
    }
    const std::size_t len = static_cast<std::size_t>(nl - start);
    begin_ += len + 1;
    ++line_no_;
    if (have_partial) {
      carry_.append(start, len);
      if (!carry_.empty() && carry_.back() == '\r') carry_.pop_back();
      line = carry_;
    } else {
      line = std::string_view(start, len);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    }
    return true;
  }
}

bool Splitter::split(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  if (line.find('"') == std::string_view::npos) {
    std::size_t pos = 0;
    for (;;) {
      const auto next = line.find(delim_, pos);
      if (next == std::string_view::npos) {
        fields.push_back(line.substr(pos));
        return true;
      }
      fields.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
  }
  // Slow path for quoted fields. Views must stay stable, so reserve first.
  unescaped_.clear();
  unescaped_.reserve(line.size() + 1);
  std::size_t i = 0;
  for (;;) {
    std::string& out = unescaped_.emplace_back();
    if (i < line.size() && line[i] == '"') {
      ++i;
      for (;;) {
        if (i >= line.size()) return false;
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            out.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        out.push_back(line[i++]);
      }
      if (i < line.size() && line[i] != delim_) return false;
    } else {
      while (i < line.size() && line[i] != delim_) out.push_back(line[i++]);
    }
    if (i >= line.size()) break;
    ++i;  // delimiter
  }
  for (const auto& f : unescaped_) fields.emplace_back(f);
  return true;
}

std::string escape(std::string_view field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

bool parse_double(std::string_view text, double& out) {
  if (text == "nan") {
    out = std::nan("");
    return true;
  }
  if (text == "inf") {
    out = HUGE_VAL;
    return true;
  }
  if (text == "-inf") {
    out = -HUGE_VAL;
    return true;
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

bool parse_int(std::string_view text, long long& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

}  // namespace amlprof::csv
