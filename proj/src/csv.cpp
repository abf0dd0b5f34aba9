#include "fxvol/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <boost/tokenizer.hpp>
#include <fmt/format.h>

#include "fxvol/error.hpp"

namespace fxvol::csv {
namespace {

std::vector<std::string> split(const std::string& line, const std::string& source, std::size_t line_no) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<std::string> out;
  try {
    Tokenizer tok(line, boost::escaped_list_separator<char>('\\', ',', '"'));
    for (const auto& field : tok) out.push_back(field);
  } catch (const boost::escaped_list_error& e) {
    fail(ErrorKind::Parse, fmt::format("{}:{}: {}", source, line_no, e.what()));
  }
  return out;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  fail(ErrorKind::Parse, fmt::format("{}: missing column '{}'", source, name));
}

bool Table::has_column(std::string_view name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

Table read(std::istream& in, const std::string& source) {
  Table table;
  table.source = source;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, source, line_no);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      fail(ErrorKind::Parse, fmt::format("{}:{}: expected {} fields, found {}", source, line_no,
                                         table.header.size(), fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) fail(ErrorKind::Parse, fmt::format("{}: empty file", source));
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  return read(in, path.string());
}

double parse_double(std::string_view field, const Table& table, std::size_t row) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(ErrorKind::Parse,
         fmt::format("{}:{}: not a number '{}'", table.source, table.line_numbers.at(row), field));
  }
  return value;
}

std::string format_double(double value) { return fmt::format("{}", value); }

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\\") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace fxvol::csv
