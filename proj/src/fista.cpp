// Accelerated projected gradient (FISTA) for the flipped formulations using the
// fixed step 1/Lip from the curvature-2 majorisation of A^T A.

#include <cmath>

#include "solver_detail.hpp"

namespace spcp {

SolveResult solve_flip_fista(const Problem& p, const ProductPoint& x0, const SolverConfig& cfg) {
  cfg.validate();
  const auto params = detail::flip_params(p, "solve_flip_fista");
  if (params.tau == 0.0) return detail::trivial_result(p, cfg);

  detail::RunRecorder rec(cfg);
  detail::BallProjector proj(params, cfg);
  const double lip = p.op.lipschitz_bound();
  const double step = 1.0 / lip;

  ProductPoint x = proj.project(x0, 0);
  SmoothEval ev_x = evaluate_smooth(p, x);
  ProductPoint y = x;
  SmoothEval ev_y = ev_x;
  double t = 1.0;
  bool certifying = proj.certifying();

  SolveResult res;
  res.point = x;
  res.objective = ev_x.value;
  res.residual_norm = ev_x.residual.norm();
  res.optimality = std::numeric_limits<double>::infinity();
  res.status = SolveStatus::max_iterations;

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    ProductPoint x_new = proj.project(y - step * ev_y.grad, it);
    const bool exact = proj.last_exact();
    SmoothEval ev_new = evaluate_smooth(p, x_new);

    ProductPoint normal = lip * (y - x_new) - ev_y.grad;
    const double opt = detail::optimality_bound(normal, ev_new.grad);
    const double resid = ev_new.residual.norm();
    rec.record(it + 1, x_new, ev_new.value, resid, opt);

    if (ev_new.value <= res.objective) {
      res.point = x_new;
      res.objective = ev_new.value;
      res.residual_norm = resid;
      res.optimality = opt;
    }

    if (detail::certified_stop(exact && opt * step <= cfg.tol * (1.0 + x_new.norm()), certifying,
                               [&] { proj.use_dense_svd(); })) {
      res.point = x_new;
      res.objective = ev_new.value;
      res.residual_norm = resid;
      res.optimality = opt;
      res.status = SolveStatus::converged_optimality;
      ++it;
      break;
    }
    const bool stalled =
        cfg.stop_on_objective_change && it >= 2 && detail::objective_stalled(ev_x.value, ev_new.value, cfg.tol);

    if (cfg.accelerate) {
      const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_new + ((t - 1.0) / t_new) * (x_new - x);
      t = t_new;
      ev_y = evaluate_smooth(p, y);
    } else {
      y = x_new;
      ev_y = ev_new;
    }
    x = std::move(x_new);
    ev_x = std::move(ev_new);

    if (stalled) {
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
