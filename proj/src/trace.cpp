#include "spcp/trace.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "spcp/error.hpp"

namespace spcp {

namespace {

constexpr std::string_view kHeader = "iter,wall_seconds,objective,residual,ref_error";

void put_double(std::ostream& out, double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.write(buf.data(), ptr - buf.data());
}

double get_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidArgument("trace csv: bad number on line " + std::to_string(line));
  return v;
}

}  // namespace

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
  out << kHeader << '\n';
  for (const TraceRow& row : trace.rows) {
    out << row.iter << ',';
    put_double(out, row.wall_seconds);
    out << ',';
    put_double(out, row.objective);
    out << ',';
    put_double(out, row.residual);
    out << ',';
    if (row.ref_error) put_double(out, *row.ref_error);
    out << '\n';
  }
}

SolveTrace read_trace_csv(std::istream& in) {
  SolveTrace trace;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw InvalidArgument("trace csv: empty input");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw InvalidArgument("trace csv: unexpected header on line 1");

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 5> fields;
    std::string_view view(line);
    std::size_t count = 0;
    for (;;) {
      const std::size_t comma = view.find(',');
      if (count >= fields.size())
        throw InvalidArgument("trace csv: too many fields on line " + std::to_string(lineno));
      fields[count++] = view.substr(0, comma);
      if (comma == std::string_view::npos) break;
      view.remove_prefix(comma + 1);
    }
    if (count != fields.size())
      throw InvalidArgument("trace csv: expected 5 fields on line " + std::to_string(lineno));
    TraceRow row;
    int iter = 0;
    auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), iter);
    if (ec != std::errc() || ptr != fields[0].data() + fields[0].size())
      throw InvalidArgument("trace csv: bad iteration on line " + std::to_string(lineno));
    row.iter = iter;
    row.wall_seconds = get_double(fields[1], lineno);
    row.objective = get_double(fields[2], lineno);
    row.residual = get_double(fields[3], lineno);
    if (!fields[4].empty()) row.ref_error = get_double(fields[4], lineno);
    trace.rows.push_back(row);
  }
  return trace;
}

}  // namespace spcp
