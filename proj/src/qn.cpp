// Gauss-Seidel quasi-Newton scheme for problems whose regulariser splits
// across L and S (flip-max ball constraints, Lagrangian penalties).
//
// The exact Hessian of rho(L + S - Y) couples the two blocks. Each sweep
// replaces the unknown partner step by the best available estimate:
//
//   L+ = op_L(L_k - grad_L f(L_k, S_k + (S_k - S_{k-1})) / c)
//   S+ = op_S(S_k - grad_S f(L+, S_k) / c)
//
// where op_* is the block projection (or prox with step 1/c) and c is the
// second-order scaling in (1, 2). A sweep that increases the objective is
// replaced by a plain projected/proximal gradient step with step 1/Lip.

#include <cmath>
#include <limits>

#include "solver_detail.hpp"
#include "spcp/error.hpp"

namespace spcp {

namespace {

struct BlockRules {
  // Block update given the gradient-step point and curvature c.
  std::function<Mat(const Mat& arg, double c, int iteration)> update_L;
  std::function<Mat(const Mat& arg, double c)> update_S;
  // Regulariser value of the latest update_L output plus that of S.
  std::function<double(const Mat& s)> regularizer;
  std::function<bool()> last_L_exact;
  std::function<bool()> certifying;
  std::function<void()> use_dense_svd;
  // Converts the certificate into the quantity compared against tol.
  std::function<double(double opt, const ProductPoint& x)> stop_measure;
  double stop_scale = 1.0;
};

struct Sweep {
  ProductPoint x;
  ProductPoint normal;
  bool exact = true;
  double reg = 0.0;
};

SolveResult gauss_seidel(const Problem& p, ProductPoint x, double reg0, const SolverConfig& cfg,
                         const BlockRules& rules) {
  detail::RunRecorder rec(cfg);
  const double lip = p.op.lipschitz_bound();
  const double c = cfg.qn_scale;

  SmoothEval ev = evaluate_smooth(p, x);
  double objective = ev.value + reg0;
  Mat s_prev = x.S;
  bool certifying = rules.certifying();

  SolveResult res;
  res.point = x;
  res.objective = objective;
  res.residual_norm = ev.residual.norm();
  res.optimality = std::numeric_limits<double>::infinity();
  res.status = SolveStatus::max_iterations;

  auto block_sweep = [&](const ProductPoint& from, const Mat& grad_L_arg, double curv_L,
                         double curv_S, const Mat* grad_S_fixed, int it) {
    Sweep sw;
    Mat l_new = rules.update_L(from.L - grad_L_arg / curv_L, curv_L, it);
    sw.exact = rules.last_L_exact();
    Mat grad_S;
    if (grad_S_fixed) {
      grad_S = *grad_S_fixed;
    } else {
      // Fresh L, previous S.
      const Mat r = p.op.apply(ProductPoint(l_new, from.S)) - p.Y;
      grad_S = p.op.backward(p.rho.gradient(r));
    }
    Mat s_new = rules.update_S(from.S - grad_S / curv_S, curv_S);
    sw.reg = rules.regularizer(s_new);
    sw.normal = ProductPoint(curv_L * (from.L - l_new) - grad_L_arg,
                             curv_S * (from.S - s_new) - grad_S);
    sw.x = ProductPoint(std::move(l_new), std::move(s_new));
    return sw;
  };

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    // L-block gradient at the extrapolated partner S_k + (S_k - S_{k-1}).
    const Mat delta_S = x.S - s_prev;
    const Mat r_extra = p.op.apply(ProductPoint(x.L, x.S + delta_S)) - p.Y;
    const Mat grad_L = p.op.backward(p.rho.gradient(r_extra));

    Sweep sw = block_sweep(x, grad_L, c, c, nullptr, it);
    SmoothEval ev_new = evaluate_smooth(p, sw.x);
    double obj_new = ev_new.value + sw.reg;

    if (obj_new > objective) {
      // Safeguard: joint projected / proximal gradient step from x.
      sw = block_sweep(x, ev.grad.L, lip, lip, &ev.grad.S, it);
      ev_new = evaluate_smooth(p, sw.x);
      obj_new = ev_new.value + sw.reg;
    }

    const double opt = detail::optimality_bound(sw.normal, ev_new.grad);
    const double resid = ev_new.residual.norm();
    rec.record(it + 1, sw.x, obj_new, resid, opt);

    const double prev_objective = objective;
    s_prev = std::move(x.S);
    x = std::move(sw.x);
    ev = std::move(ev_new);
    objective = obj_new;

    if (objective <= res.objective) {
      res.point = x;
      res.objective = objective;
      res.residual_norm = resid;
      res.optimality = opt;
    }

    if (detail::certified_stop(sw.exact && rules.stop_measure(opt, x) <= cfg.tol * rules.stop_scale, certifying,
                               rules.use_dense_svd)) {
      res.point = x;
      res.objective = objective;
      res.residual_norm = resid;
      res.optimality = opt;
      res.status = SolveStatus::converged_optimality;
      ++it;
      break;
    }
    if (cfg.stop_on_objective_change && it >= 2 &&
        detail::objective_stalled(prev_objective, objective, cfg.tol)) {
      res.status = SolveStatus::converged_objective;
      ++it;
      break;
    }
  }
  res.iterations = it;
  res.trace = rec.take_trace();
  return res;
}

}  // namespace

SolveResult solve_flip_qn(const Problem& p, const ProductPoint& x0, const SolverConfig& cfg) {
  cfg.validate();
  const auto params = detail::flip_params(p, "solve_flip_qn");
  if (params.gauge.kind != GaugeKind::max)
    throw InvalidArgument("solve_flip_qn: the quasi-Newton sweep needs the uncoupled flip-max ball");
  if (params.tau == 0.0) return detail::trivial_result(p, cfg);

  detail::BallProjector proj(params, cfg);
  const double lip = p.op.lipschitz_bound();

  BlockRules rules;
  rules.update_L = [&](const Mat& arg, double, int it) { return proj.project_low_rank(arg, it); };
  rules.update_S = [&](const Mat& arg, double) { return proj.project_sparse(arg); };
  rules.regularizer = [](const Mat&) { return 0.0; };
  rules.last_L_exact = [&] { return proj.last_exact(); };
  rules.certifying = [&] { return proj.certifying(); };
  rules.use_dense_svd = [&] { proj.use_dense_svd(); };
  // Fixed-point residual |x - P(x - grad/Lip)| is at most opt / Lip.
  rules.stop_measure = [lip](double opt, const ProductPoint& x) { return opt / lip / (1.0 + x.norm()); };

  ProductPoint x = proj.project(x0, 0);
  return gauss_seidel(p, std::move(x), 0.0, cfg, rules);
}

SolveResult solve_lag_qn(const Problem& p, const ProductPoint& x0, const SolverConfig& cfg) {
  cfg.validate();
  const auto* lag = std::get_if<Lagrangian>(&p.formulation);
  if (!lag) throw InvalidArgument("solve_lag_qn: requires the Lagrangian formulation");
  if (x0.rows() != p.rows() || x0.cols() != p.cols())
    throw InvalidArgument("solve_lag_qn: starting point has the wrong shape");

  LowRankOps low_rank(cfg.seed, cfg.randomized_svd, cfg.svd);
  const double lambda_L = lag->lambda_L;
  const double lambda_S = lag->lambda_S;
  const bool nonneg = p.nonneg_S;
  const Eigen::Index first_cap = cfg.randomized_svd ? cfg.svd_rank_limit_first_iters : 0;

  BlockRules rules;
  rules.update_L = [&](const Mat& arg, double c, int it) {
    return low_rank.prox_nuclear(arg, lambda_L / c, it < 2 ? first_cap : 0);
  };
  rules.update_S = [&](const Mat& arg, double c) {
    return nonneg ? prox_l1_nonneg(arg, lambda_S / c) : prox_l1(arg, lambda_S / c);
  };
  rules.regularizer = [&](const Mat& s) {
    return lambda_L * low_rank.last_nuclear() + lambda_S * s.cwiseAbs().sum();
  };
  rules.last_L_exact = [&] { return low_rank.last_exact(); };
  rules.certifying = [&] { return !low_rank.randomized(); };
  rules.use_dense_svd = [&] { low_rank.use_dense(); };
  rules.stop_measure = [](double opt, const ProductPoint&) { return opt; };
  rules.stop_scale = 1.0 + p.Y.norm();

  ProductPoint x = x0;
  if (nonneg) x.S = x.S.cwiseMax(0.0);
  const double reg0 = lambda_L * nuclear_norm(x.L) + lambda_S * x.S.cwiseAbs().sum();
  return gauss_seidel(p, std::move(x), reg0, cfg, rules);
}

}  // namespace spcp
