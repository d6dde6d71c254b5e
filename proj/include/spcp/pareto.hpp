#pragma once

#include <functional>
#include <vector>

#include "spcp/solvers.hpp"

namespace spcp {

// History of the value function v(tau) = min rho(A(L,S) - Y) s.t. phi(L,S) <= tau
// along a root-finding run.
struct ValueFnState {
  std::vector<double> tau_history;
  std::vector<double> value_history;
  std::vector<double> deriv_history;
  ProductPoint warm_start;

  std::size_t size() const { return tau_history.size(); }
};

struct ValuePoint {
  double value = 0.0;
  SolveResult solve;
};

// Solves the flipped subproblem at radius tau with the gauge of `p`
// (flip-max via the quasi-Newton sweep, flip-sum via SPG).
ValuePoint eval_value_fn(const Problem& p, double tau, const ProductPoint& warm,
                         const SolverConfig& cfg);

// v'(tau) = -phi°(A^T grad rho(A(sol) - Y)).
double value_fn_derivative(const Problem& p, const ProductPoint& sol);

// Value and slope of v at one tau.
struct ValueSample {
  double value;
  double derivative;
};
using ValueEvaluator = std::function<ValueSample(double tau)>;

struct RootFindOptions {
  double rel_tol = 1e-4;
  int max_evaluations = 100;
  int max_doublings = 60;
};

struct RootFindResult {
  double tau = 0.0;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> taus;
  std::vector<double> values;
  std::vector<double> derivatives;
};

// Newton's method for v(tau) = target from tau_0 = 0, safeguarded by
// bisection whenever the step leaves the current bracket. Knows nothing
// about matrices. Throws ConvergenceError on bracket collapse or when no
// upper bracket appears after max_doublings.
RootFindResult find_pareto_root(const ValueEvaluator& v, double target,
                                const RootFindOptions& opts = {});

struct ConstrainedResult {
  SolveResult solve;  // objective is the gauge value, residual_norm |A(x) - Y|_F
  ValueFnState history;
  double tau = 0.0;
  double target = 0.0;
  int value_evaluations = 0;
  bool converged = false;
};

// Constrained formulations through the Pareto frontier. The target is given
// in penalty units; the overload without it uses rho at radius eps
// (eps^2 / 2 for least squares).
ConstrainedResult solve_constrained(const Problem& p, double target, const SolverConfig& cfg = {},
                                    const RootFindOptions& opts = {});
ConstrainedResult solve_constrained(const Problem& p, const SolverConfig& cfg = {},
                                    const RootFindOptions& opts = {});

double constrained_eps(const Problem& p);

// lambda_max = |L|_* / |S|_1 for an oracle split.
double lambda_max_from_oracle(const Mat& L, const Mat& S);

}  // namespace spcp
