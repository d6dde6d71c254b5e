#pragma once

// Shared machinery for the iterative solvers. Not installed.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>

#include "spcp/gauge.hpp"
#include "spcp/solvers.hpp"

namespace spcp::detail {

// Radius and weight of a flipped formulation; throws for anything else.
struct FlipParams {
  GaugeSpec gauge;
  double tau;
};
FlipParams flip_params(const Problem& p, const char* who);

// Trace recording with observer time excluded from the clock.
class RunRecorder {
 public:
  explicit RunRecorder(const SolverConfig& cfg);

  void record(int iter, const ProductPoint& x, double objective, double residual_norm,
              double optimality);

  SolveTrace take_trace() { return std::move(trace_); }
  double elapsed() const { return clock_->elapsed(); }

 private:
  const SolverConfig& cfg_;
  std::shared_ptr<Stopwatch> clock_;
  SolveTrace trace_;
};

// Projection onto the gauge ball of a flipped problem. The max ball uses
// the adaptive truncated SVD for its nuclear factor; the sum ball needs the
// full spectrum and always uses a dense SVD.
class BallProjector {
 public:
  BallProjector(const FlipParams& params, const SolverConfig& cfg);

  // `iteration` < 2 applies the configured rank limit, after which the
  // result is feasible but not necessarily the exact projection.
  ProductPoint project(const ProductPoint& x, int iteration);
  Mat project_low_rank(const Mat& l, int iteration);
  Mat project_sparse(const Mat& s) const;

  bool last_exact() const { return last_exact_; }
  // True when projections are exact to rounding (dense SVD or sum ball).
  bool certifying() const { return params_.gauge.kind == GaugeKind::sum || !low_rank_.randomized(); }
  void use_dense_svd() { low_rank_.use_dense(); }
  double tau() const { return params_.tau; }
  const GaugeSpec& gauge() const { return params_.gauge; }

 private:
  Eigen::Index rank_cap(int iteration) const;

  FlipParams params_;
  const SolverConfig& cfg_;
  LowRankOps low_rank_;
  bool last_exact_ = true;
};

inline bool objective_stalled(double before, double after, double tol) {
  const double scale = std::max(std::abs(after), std::numeric_limits<double>::min());
  return std::abs(before - after) <= tol * scale;
}

// Optimality exit: a passing certificate from a sketched SVD only moves the
// solver to dense SVDs; the exit needs a certificate computed densely.
inline bool certified_stop(bool passes, bool& certifying, const std::function<void()>& go_dense) {
  if (!passes) return false;
  if (certifying) return true;
  go_dense();
  certifying = true;
  return false;
}

inline double optimality_bound(const ProductPoint& normal, const ProductPoint& grad_next) {
  return (grad_next + normal).norm();
}

SolveResult trivial_result(const Problem& p, const SolverConfig& cfg);

}  // namespace spcp::detail
