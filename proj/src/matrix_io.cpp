#include "spcp/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "spcp/error.hpp"

namespace spcp {

namespace {

constexpr std::size_t kMagicLen = 8;

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
  return v;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw InvalidArgument("binary matrix: truncated header");
  return to_little(v);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, std::size_t line) {
  field = trim(field);
  double v = 0.0;
  // from_chars rejects a leading '+'.
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw InvalidArgument("csv matrix: bad value '" + std::string(field) + "' on line " +
                          std::to_string(line));
  return v;
}

}  // namespace

Mat parse_csv(std::istream& in) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = view.find(',', start);
      const std::string_view field =
          view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      values.push_back(parse_double(field, lineno));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw InvalidArgument("csv matrix: line " + std::to_string(lineno) + " has " +
                            std::to_string(count) + " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  Mat a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
  return a;
}

void write_csv(std::ostream& out, const Mat& a) {
  std::array<char, 32> buf{};
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) out.put(',');
      // Shortest representation that round-trips exactly.
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), a(i, j));
      out.write(buf.data(), ptr - buf.data());
    }
    out.put('\n');
  }
}

Mat parse_binary(std::istream& in) {
  std::array<char, kMagicLen> magic{};
  in.read(magic.data(), kMagicLen);
  if (!in || std::memcmp(magic.data(), kBinaryMagic, kMagicLen) != 0)
    throw InvalidArgument("binary matrix: bad magic");
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols)
    throw InvalidArgument("binary matrix: implausible dimensions");
  Mat a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      const std::uint64_t bits = get_u64(in);
      double v;
      std::memcpy(&v, &bits, sizeof v);
      if (!std::isfinite(v)) throw InvalidArgument("binary matrix: non-finite entry");
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return a;
}

void write_binary(std::ostream& out, const Mat& a) {
  out.write(kBinaryMagic, kMagicLen);
  put_u64(out, static_cast<std::uint64_t>(a.rows()));
  put_u64(out, static_cast<std::uint64_t>(a.cols()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      std::uint64_t bits;
      const double v = a(i, j);
      std::memcpy(&bits, &v, sizeof bits);
      put_u64(out, bits);
    }
  }
}

MatrixFormat detect_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::array<char, kMagicLen> magic{};
  in.read(magic.data(), kMagicLen);
  if (in.gcount() == static_cast<std::streamsize>(kMagicLen) &&
      std::memcmp(magic.data(), kBinaryMagic, kMagicLen) == 0)
    return MatrixFormat::bin;
  return MatrixFormat::csv;
}

Mat read_matrix(const std::filesystem::path& path, std::optional<MatrixFormat> format) {
  const MatrixFormat fmt = format ? *format : detect_format(path);
  std::ifstream in(path, fmt == MatrixFormat::bin ? std::ios::binary : std::ios::in);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return fmt == MatrixFormat::bin ? parse_binary(in) : parse_csv(in);
}

void write_matrix(const std::filesystem::path& path, const Mat& a, MatrixFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  if (format == MatrixFormat::bin)
    write_binary(out, a);
  else
    write_csv(out, a);
  if (!out) throw InvalidArgument("write failed for " + path.string());
}

std::optional<MatrixFormat> parse_format_name(const std::string& name) {
  if (name == "csv") return MatrixFormat::csv;
  if (name == "bin") return MatrixFormat::bin;
  return std::nullopt;
}

const char* format_extension(MatrixFormat format) {
  return format == MatrixFormat::bin ? ".bin" : ".csv";
}

}  // namespace spcp
