#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maskbench::csv {

/// 17 significant digits; parse_double(format_double(x)) == x for every finite x.
std::string format_double(double x);

/// Whole-field parse. Returns nullopt on anything that is not a number
/// (empty fields included). "nan"/"inf" parse to their IEEE values.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// Line reader that strips '\r' and tracks the 1-based line number.
class Reader {
 public:
  explicit Reader(const std::string& path);
  bool next_line(std::string& line);
  std::size_t line_number() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

/// Opens for writing or throws IoError.
std::ofstream open_for_write(const std::string& path);

std::string join(const std::vector<std::string>& fields, char sep = ',');

/// RFC 4180 quoting, applied only when the field holds a comma, quote or newline.
std::string quote(std::string_view field);
/// Inverse of join() over quote()d fields.
std::vector<std::string> split_quoted(std::string_view line);

}  // namespace maskbench::csv
