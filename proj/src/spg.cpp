// Spectral projected gradient for the flipped formulations: Barzilai-Borwein
// steps with a non-monotone Armijo line search.

#include <algorithm>
#include <cmath>
#include <deque>

#include "solver_detail.hpp"
#include "spcp/error.hpp"

namespace spcp {

SolveResult solve_flip_spg(const Problem& p, const ProductPoint& x0, const SolverConfig& cfg) {
  cfg.validate();
  const auto params = detail::flip_params(p, "solve_flip_spg");
  if (params.tau == 0.0) return detail::trivial_result(p, cfg);

  detail::RunRecorder rec(cfg);
  detail::BallProjector proj(params, cfg);
  const double lip = p.op.lipschitz_bound();

  ProductPoint x = proj.project(x0, 0);
  SmoothEval ev = evaluate_smooth(p, x);
  std::deque<double> history{ev.value};

  SolveResult res;
  res.point = x;
  res.objective = ev.value;
  res.residual_norm = ev.residual.norm();
  res.optimality = std::numeric_limits<double>::infinity();

  double alpha = 1.0 / lip;
  bool certifying = proj.certifying();
  res.status = SolveStatus::max_iterations;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    ProductPoint trial = proj.project(x - alpha * ev.grad, it);
    const bool exact = proj.last_exact();
    ProductPoint d = trial - x;
    const double slope = dot(ev.grad, d);
    SmoothEval ev_trial = evaluate_smooth(p, trial);

    // (x - alpha g - trial) / alpha lies in the normal cone at the trial point.
    ProductPoint normal = (1.0 / alpha) * (x - trial) - ev.grad;
    const double opt = detail::optimality_bound(normal, ev_trial.grad);
    if (detail::certified_stop(exact && opt / lip <= cfg.tol * (1.0 + trial.norm()), certifying,
                               [&] { proj.use_dense_svd(); })) {
      res.point = std::move(trial);
      res.objective = ev_trial.value;
      res.residual_norm = ev_trial.residual.norm();
      res.optimality = opt;
      res.status = SolveStatus::converged_optimality;
      rec.record(it + 1, res.point, res.objective, res.residual_norm, opt);
      ++it;
      break;
    }

    const double f_ref = *std::max_element(history.begin(), history.end());
    double step = 1.0;
    ProductPoint x_new = std::move(trial);
    SmoothEval ev_new = std::move(ev_trial);
    // Safeguarded quadratic backtracking.
    for (int bt = 0; bt < 60 && ev_new.value > f_ref + cfg.armijo * step * slope; ++bt) {
      const double denom = ev_new.value - ev.value - step * slope;
      double next = denom > 0.0 ? -0.5 * step * step * slope / denom : 0.5 * step;
      next = std::clamp(next, 0.1 * step, 0.5 * step);
      step = next;
      x_new = x + step * d;
      ev_new = evaluate_smooth(p, x_new);
    }

    const ProductPoint s = x_new - x;
    const ProductPoint y = ev_new.grad - ev.grad;
    const double sy = dot(s, y);
    alpha = sy > 0.0 ? s.squared_norm() / sy : cfg.bb_step_max;
    alpha = std::clamp(alpha, cfg.bb_step_min, cfg.bb_step_max);

    const double f_prev = ev.value;
    x = std::move(x_new);
    ev = std::move(ev_new);
    history.push_back(ev.value);
    if (static_cast<int>(history.size()) > cfg.nonmonotone_window) history.pop_front();

    const double resid = ev.residual.norm();
    if (ev.value <= res.objective) {
      res.point = x;
      res.objective = ev.value;
      res.residual_norm = resid;
      res.optimality = step == 1.0 ? opt : res.optimality;
    }
    rec.record(it + 1, x, ev.value, resid, opt);

    if (cfg.stop_on_objective_change && it >= 2 && detail::objective_stalled(f_prev, ev.value, cfg.tol)) {
      res.status = SolveStatus::converged_objective;
      ++it;
      break;
    }
  }
  res.iterations = it;
  res.trace = rec.take_trace();
  return res;
}

}  // namespace spcp
