#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace polygene {

const char* toolkit_version() noexcept;

/// Shortest text with 17 significant digits ("%.17g"); nan and inf spelled out.
std::string format_number(double x);

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

/// Write `content` to a sibling temporary file and rename it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Comment block opening every output file.
struct OutputHeader {
  std::string kind;             // e.g. "trajectory"
  std::string config_checksum;
  std::uint64_t seed = 0;       // root seed
  std::optional<std::uint64_t> replicate_seed;

  std::string render() const;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t rows() const noexcept { return rows_; }

  void add_row(const std::vector<double>& values);
  /// Cells already formatted; must match the column count.
  void add_text_row(const std::vector<std::string>& cells);

  /// Header lines, then the column names, then the rows.
  std::string render(const OutputHeader& header) const;

 private:
  std::vector<std::string> columns_;
  std::string body_;
  std::size_t rows_ = 0;
};

}  // namespace polygene
