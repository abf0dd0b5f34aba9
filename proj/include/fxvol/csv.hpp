#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fxvol::csv {

/// A parsed CSV file: header plus rows of raw fields. Quoted fields may
/// contain commas. `line_numbers[i]` is the 1-based source line of `rows[i]`.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  /// Index of a named column; parse error if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

Table read(std::istream& in, const std::string& source);
Table read_file(const std::filesystem::path& path);

double parse_double(std::string_view field, const Table& table, std::size_t row);

/// Shortest representation that round-trips exactly.
std::string format_double(double value);

/// Quotes the field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace fxvol::csv
