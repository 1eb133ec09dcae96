#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace canopyflux {

struct CsvRecord {
  std::size_t line = 0;  // 1-based line in the source file
  std::vector<std::string> fields;
};

/// A fully-loaded comma separated file. Fields are unquoted and trimmed; the
/// pipeline's schemas never carry embedded commas.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<CsvRecord> rows;

  /// Index of `name` in the header, or SchemaError naming the column.
  std::size_t require_column(std::string_view name) const;

  double number(const CsvRecord& record, std::size_t column) const;  // RowError on failure
  long integer(const CsvRecord& record, std::size_t column) const;
  const std::string& text(const CsvRecord& record, std::size_t column) const;
  [[noreturn]] void row_error(const CsvRecord& record, std::string_view what) const;
};

CsvTable read_csv(std::istream& in, std::string source);
CsvTable read_csv(const std::filesystem::path& path);  // IoError if unreadable

/// Shortest decimal text that parses back to the identical double.
std::string format_number(double value);

/// Writes atomically enough for our purposes: temp file then rename.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace canopyflux
