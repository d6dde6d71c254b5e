#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "spcp/matrix.hpp"

namespace spcp {

// On-disk matrix encodings. CSV is dense, one row per line, no header.
// Binary is "SPCPMAT1", u64 rows, u64 cols, then rows*cols f64, all
// little-endian, row-major.
enum class MatrixFormat { csv, bin };

inline constexpr char kBinaryMagic[] = "SPCPMAT1";

MatrixFormat detect_format(const std::filesystem::path& path);

Mat read_matrix(const std::filesystem::path& path,
                std::optional<MatrixFormat> format = std::nullopt);
void write_matrix(const std::filesystem::path& path, const Mat& a, MatrixFormat format);

Mat parse_csv(std::istream& in);
void write_csv(std::ostream& out, const Mat& a);
Mat parse_binary(std::istream& in);
void write_binary(std::ostream& out, const Mat& a);

std::optional<MatrixFormat> parse_format_name(const std::string& name);
const char* format_extension(MatrixFormat format);

}  // namespace spcp
