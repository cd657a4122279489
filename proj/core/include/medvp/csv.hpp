#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace medvp {

/// A CSV file with a header row. Quoted fields may contain commas, doubled
/// quotes and line breaks.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of the first column named `name` (exact match after trimming).
  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace medvp
