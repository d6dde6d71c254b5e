#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <vector>

namespace spcp {

// Wall clock that can be paused so bookkeeping (reference-error metrics,
// logging) is excluded from reported solve times.
class Stopwatch {
 public:
  using clock = std::chrono::steady_clock;

  Stopwatch() : started_(clock::now()) {}

  double elapsed() const {
    const auto now = paused_ ? paused_at_ : clock::now();
    return std::chrono::duration<double>(now - started_).count() - excluded_;
  }

  void pause() {
    if (!paused_) {
      paused_ = true;
      paused_at_ = clock::now();
    }
  }

  void resume() {
    if (paused_) {
      excluded_ += std::chrono::duration<double>(clock::now() - paused_at_).count();
      paused_ = false;
    }
  }

 private:
  clock::time_point started_;
  clock::time_point paused_at_{};
  double excluded_ = 0.0;
  bool paused_ = false;
};

struct TraceRow {
  int iter = 0;
  double wall_seconds = 0.0;
  double objective = 0.0;
  double residual = 0.0;
  std::optional<double> ref_error;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct SolveTrace {
  std::vector<TraceRow> rows;

  bool empty() const { return rows.empty(); }
  friend bool operator==(const SolveTrace&, const SolveTrace&) = default;
};

// CSV with header `iter,wall_seconds,objective,residual,ref_error`. A
// missing ref_error is an empty field. Values are written in shortest
// round-trip form.
void write_trace_csv(std::ostream& out, const SolveTrace& trace);
SolveTrace read_trace_csv(std::istream& in);

}  // namespace spcp
