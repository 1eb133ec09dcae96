#include "canopyflux/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "canopyflux/errors.hpp"

namespace canopyflux {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    auto piece = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    out.emplace_back(trim(piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::size_t CsvTable::require_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorKind::SchemaError, fmt::format("{}: missing column '{}'", source, name));
}

void CsvTable::row_error(const CsvRecord& record, std::string_view what) const {
  throw Error(ErrorKind::RowError, fmt::format("{}:{}: {}", source, record.line, what));
}

const std::string& CsvTable::text(const CsvRecord& record, std::size_t column) const {
  if (column >= record.fields.size()) {
    row_error(record, fmt::format("expected {} fields, found {}", header.size(), record.fields.size()));
  }
  return record.fields[column];
}

double CsvTable::number(const CsvRecord& record, std::size_t column) const {
  const std::string& field = text(record, column);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    row_error(record, fmt::format("column '{}': not a finite number: '{}'", header[column], field));
  }
  return value;
}

long CsvTable::integer(const CsvRecord& record, std::size_t column) const {
  const std::string& field = text(record, column);
  long value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
    row_error(record, fmt::format("column '{}': not an integer: '{}'", header[column], field));
  }
  return value;
}

CsvTable read_csv(std::istream& in, std::string source) {
  CsvTable table;
  table.source = std::move(source);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!have_header) {
      // Tolerate a UTF-8 byte order mark on the header line.
      std::string_view view = line;
      if (view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
      table.header = split_fields(view);
      have_header = true;
      continue;
    }
    CsvRecord record{line_no, split_fields(line)};
    if (record.fields.size() != table.header.size()) {
      table.row_error(record, fmt::format("expected {} fields, found {}", table.header.size(),
                                          record.fields.size()));
    }
    table.rows.push_back(std::move(record));
  }
  if (!have_header) {
    throw Error(ErrorKind::SchemaError, fmt::format("{}: missing header line", table.source));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open '{}'", path.string()));
  return read_csv(in, path.string());
}

std::string format_number(double value) { return fmt::format("{}", value); }

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot write '{}'", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::IoError, fmt::format("write failed for '{}'", path.string()));
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, fmt::format("cannot rename into '{}': {}", path.string(), ec.message()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace canopyflux
