#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace edgespec::harness {

/// Bumped whenever a column is added, removed or reordered.
inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip decimal form; identical doubles give identical text.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column; throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

void write_csv_line(std::ostream& out, const std::vector<std::string>& fields);

/// Plain comma-separated text without quoting (no field contains a comma).
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace edgespec::harness
