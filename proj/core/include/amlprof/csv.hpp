#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace amlprof::csv {

/// Reads an input stream line by line through a large buffer.
/// Lines are returned without their terminator ("\n" or "\r\n").
class LineReader {
 public:
  explicit LineReader(std::istream& in, std::size_t buffer_size = 1 << 20);

  /// False at end of input. The view stays valid until the next call.
  bool next(std::string_view& line);

  /// 1-based number of the line most recently returned.
  std::size_t line_number() const { return line_no_; }

 private:
  bool refill();

  std::istream& in_;
  std::vector<char> buf_;
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
  bool eof_ = false;
  std::size_t line_no_ = 0;
  std::string carry_;
};

/// Splits one record. Double-quoted fields with doubled-quote escapes are supported;
/// embedded line breaks are not.
class Splitter {
 public:
  explicit Splitter(char delimiter = ',') : delim_(delimiter) {}

  /// Returns false on an unterminated quote.
  bool split(std::string_view line, std::vector<std::string_view>& fields);

 private:
  char delim_;
  std::vector<std::string> unescaped_;
};

/// Quotes a field when it contains the delimiter, a quote, or a line break.
std::string escape(std::string_view field, char delimiter = ',');

/// Shortest decimal text that round-trips to the same double. NaN prints as "nan",
/// infinities as "inf"/"-inf".
std::string format_double(double v);

bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

}  // namespace amlprof::csv
