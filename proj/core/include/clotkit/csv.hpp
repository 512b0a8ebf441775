#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace clotkit {

/// Minimal CSV support: comma separator, optional double-quoted fields with
/// "" escapes, header row required. UTF-8 passthrough, CRLF tolerated.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or -1 when absent.
  int column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string format_csv_field(std::string_view field);
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace clotkit
