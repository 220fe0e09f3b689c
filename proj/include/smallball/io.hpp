#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smallball::io {

/// Shortest round-trip decimal form ('.' separator, locale independent).
std::string format_double(double x);

/// Splits "1,2,4" into doubles; empty input gives an empty vector.
std::vector<double> parse_double_list(std::string_view text);
std::string join_doubles(std::span<const double> values);

/// Minimal CSV writer: mandatory header, '\n' line endings, optional
/// leading '# key=value' comment lines.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header,
            std::vector<std::pair<std::string, std::string>> comments = {});

  CsvWriter& cell(double x);
  CsvWriter& cell(std::int64_t x);
  CsvWriter& cell(std::uint64_t x);
  CsvWriter& cell(std::string_view text);
  CsvWriter& cell(bool flag);
  void end_row();

 private:
  void separator();
  std::ostream& out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

}  // namespace smallball::io
