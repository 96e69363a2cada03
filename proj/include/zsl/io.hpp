#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "zsl/matrix.hpp"

namespace zsl {

// ZSLM binary matrix format, version 1:
//   bytes 0-3   magic ASCII "ZSLM"
//   bytes 4-7   little-endian u32 version = 1
//   bytes 8-11  u32 rows
//   bytes 12-15 u32 cols
//   then rows*cols IEEE-754 little-endian f64 values, row-major.
Matrix load_matrix_binary(const std::filesystem::path& path);
void save_matrix_binary(const Matrix& m, const std::filesystem::path& path);

// CSV: comma-separated decimals, LF line endings, optional single header line.
Matrix load_matrix_csv(const std::filesystem::path& path, bool has_header);
void save_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                     const std::string& header = "");

// One integer class index per line.
std::vector<int> load_labels_csv(const std::filesystem::path& path);
void save_labels_csv(const std::vector<int>& labels, const std::filesystem::path& path);

// key=value manifest files, one pair per line, '#' comments.
std::vector<std::pair<std::string, std::string>> load_manifest(
    const std::filesystem::path& path);
void save_manifest(const std::vector<std::pair<std::string, std::string>>& entries,
                   const std::filesystem::path& path);
std::string manifest_get(const std::vector<std::pair<std::string, std::string>>& entries,
                         const std::string& key);

/// Full-precision decimal rendering that round-trips through load_matrix_csv.
std::string format_double(double v);

}  // namespace zsl
