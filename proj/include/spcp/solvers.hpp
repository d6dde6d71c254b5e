#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "spcp/gauge.hpp"
#include "spcp/matrix.hpp"
#include "spcp/operators.hpp"
#include "spcp/trace.hpp"

namespace spcp {

// Formulations. The flipped problems minimise rho(A(L,S) - Y) over a gauge
// ball; the constrained ones minimise the gauge subject to a residual
// budget; the Lagrangian adds both regularisers to the penalty.
struct FlipSum {
  double lambda;
  double tau;
};
struct FlipMax {
  double lambda;
  double tau;
};
struct Lagrangian {
  double lambda_L;
  double lambda_S;
};
struct ConstrainedSum {
  double lambda;
  double eps;
};
struct ConstrainedMax {
  double lambda;
  double eps;
};

using Formulation = std::variant<FlipSum, FlipMax, Lagrangian, ConstrainedSum, ConstrainedMax>;

std::string formulation_name(const Formulation& f);

struct Problem {
  Mat Y;
  LinearOp op;
  Penalty rho;
  Formulation formulation;
  bool nonneg_S = false;

  // Sum operator with least squares.
  Problem(Mat y, Formulation f);
  Problem(Mat y, LinearOp a, Penalty penalty, Formulation f, bool nonneg = false);

  Eigen::Index rows() const { return Y.rows(); }
  Eigen::Index cols() const { return Y.cols(); }

  // Gauge of the flipped / constrained formulations. Throws for the
  // Lagrangian, which has no gauge ball.
  GaugeSpec gauge() const;
  void validate() const;
};

struct IterationInfo {
  int iteration;
  const ProductPoint& point;
  double objective;
  double residual_norm;
  double optimality;
};

// Called once per iteration with the accepted iterate. The returned value, if
// any, is stored as the trace row's reference error. Time spent inside the
// observer is excluded from the trace clock.
using IterationObserver = std::function<std::optional<double>(const IterationInfo&)>;

struct SolverConfig {
  int max_iters = 2000;
  // Relative objective change; also scales the optimality test.
  double tol = 1e-8;
  bool stop_on_objective_change = true;
  double qn_scale = 1.25;
  double bb_step_min = 1e-10;
  double bb_step_max = 1e10;
  int nonmonotone_window = 10;
  double armijo = 1e-4;
  // Rank limit applied to the truncated SVD on the first two iterations.
  Eigen::Index svd_rank_limit_first_iters = 10;
  bool randomized_svd = true;
  AdaptiveSvdOptions svd;
  std::uint64_t seed = 0x5eed;
  // FISTA only: false runs plain proximal gradient.
  bool accelerate = true;

  IterationObserver observer;
  // Shared clock for traces spanning several solves; a fresh one is used
  // when null.
  std::shared_ptr<Stopwatch> clock;
  int iteration_offset = 0;
  bool record_trace = true;

  void validate() const;
};

enum class SolveStatus { converged_objective, converged_optimality, trivial, max_iterations };

const char* status_name(SolveStatus s);

struct SolveResult {
  ProductPoint point;
  double objective = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iterations;
  // Upper bound on the distance from -grad f to the normal cone (projected
  // methods) or to the composite subdifferential (Lagrangian) at `point`.
  double optimality = 0.0;
  SolveTrace trace;

  bool converged() const { return status != SolveStatus::max_iterations; }
};

// Smooth part f(x) = rho(A(x) - Y) with residual and product-space gradient.
struct SmoothEval {
  Mat residual;
  double value = 0.0;
  ProductPoint grad;
};

SmoothEval evaluate_smooth(const Problem& p, const ProductPoint& x);

// f(X_k) + <grad f(X_k), d> + 1/2 <d, A^T A d> with d = x - X_k. Exact for
// least squares.
double quadratic_expansion(const Problem& p, const ProductPoint& at, const ProductPoint& x);

// |x - P(x - grad f(x) / Lip)| with an exact (dense SVD) projection onto the
// formulation's gauge ball.
double fixed_point_residual(const Problem& p, const ProductPoint& x);

SolveResult solve_flip_spg(const Problem& p, const ProductPoint& x0, const SolverConfig& cfg = {});
SolveResult solve_flip_fista(const Problem& p, const ProductPoint& x0, const SolverConfig& cfg = {});
SolveResult solve_flip_qn(const Problem& p, const ProductPoint& x0, const SolverConfig& cfg = {});
SolveResult solve_lag_qn(const Problem& p, const ProductPoint& x0, const SolverConfig& cfg = {});

}  // namespace spcp
