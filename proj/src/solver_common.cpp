#include <cmath>
#include <type_traits>

#include "solver_detail.hpp"
#include "spcp/error.hpp"

namespace spcp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive(double v) { return v > 0.0 && std::isfinite(v); }
bool nonneg(double v) { return v >= 0.0 && std::isfinite(v); }

}  // namespace

std::string formulation_name(const Formulation& f) {
  return std::visit(overloaded{[](const FlipSum&) { return "flip-sum"; },
                               [](const FlipMax&) { return "flip-max"; },
                               [](const Lagrangian&) { return "lag"; },
                               [](const ConstrainedSum&) { return "sum"; },
                               [](const ConstrainedMax&) { return "max"; }},
                    f);
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged_objective:
      return "converged_objective";
    case SolveStatus::converged_optimality:
      return "converged_optimality";
    case SolveStatus::trivial:
      return "trivial";
    case SolveStatus::max_iterations:
      return "max_iterations";
  }
  return "unknown";
}

Problem::Problem(Mat y, Formulation f)
    : Problem(y, LinearOp::sum(y.rows(), y.cols()), Penalty::least_squares(), f) {}

Problem::Problem(Mat y, LinearOp a, Penalty penalty, Formulation f, bool nonneg)
    : Y(std::move(y)), op(std::move(a)), rho(penalty), formulation(f), nonneg_S(nonneg) {
  validate();
}

void Problem::validate() const {
  if (!Y.allFinite()) throw InvalidArgument("Problem: Y has non-finite entries");
  if (op.rows() != Y.rows() || op.cols() != Y.cols())
    throw InvalidArgument("Problem: operator dimensions do not match Y");
  const bool ok = std::visit(
      overloaded{[](const FlipSum& f) { return positive(f.lambda) && nonneg(f.tau); },
                 [](const FlipMax& f) { return positive(f.lambda) && nonneg(f.tau); },
                 [](const Lagrangian& f) { return positive(f.lambda_L) && positive(f.lambda_S); },
                 [](const ConstrainedSum& f) { return positive(f.lambda) && nonneg(f.eps); },
                 [](const ConstrainedMax& f) { return positive(f.lambda) && nonneg(f.eps); }},
      formulation);
  if (!ok) throw InvalidArgument("Problem: invalid parameters for " + formulation_name(formulation));
}

GaugeSpec Problem::gauge() const {
  return std::visit(
      overloaded{[&](const FlipSum& f) { return GaugeSpec{GaugeKind::sum, f.lambda, nonneg_S}; },
                 [&](const FlipMax& f) { return GaugeSpec{GaugeKind::max, f.lambda, nonneg_S}; },
                 [&](const ConstrainedSum& f) { return GaugeSpec{GaugeKind::sum, f.lambda, nonneg_S}; },
                 [&](const ConstrainedMax& f) { return GaugeSpec{GaugeKind::max, f.lambda, nonneg_S}; },
                 [](const Lagrangian&) -> GaugeSpec {
                   throw InvalidArgument("Problem: the Lagrangian formulation has no gauge ball");
                 }},
      formulation);
}

void SolverConfig::validate() const {
  if (max_iters < 0) throw InvalidArgument("SolverConfig: max_iters must be >= 0");
  if (!(tol > 0.0)) throw InvalidArgument("SolverConfig: tol must be positive");
  if (!(qn_scale > 1.0 && qn_scale < 2.0))
    throw InvalidArgument("SolverConfig: qn_scale must lie in (1, 2)");
  if (!(bb_step_min > 0.0 && bb_step_min < bb_step_max))
    throw InvalidArgument("SolverConfig: invalid Barzilai-Borwein bounds");
  if (nonmonotone_window < 1) throw InvalidArgument("SolverConfig: nonmonotone_window must be >= 1");
}

SmoothEval evaluate_smooth(const Problem& p, const ProductPoint& x) {
  SmoothEval out;
  out.residual = p.op.apply(x) - p.Y;
  auto [value, grad] = p.rho.value_grad(out.residual);
  out.value = value;
  out.grad = p.op.adjoint(grad);
  return out;
}

double quadratic_expansion(const Problem& p, const ProductPoint& at, const ProductPoint& x) {
  const SmoothEval base = evaluate_smooth(p, at);
  const ProductPoint d = x - at;
  // A^T A is the Hessian of the least-squares penalty.
  const Mat ad = p.op.forward(d.L + d.S);
  return base.value + dot(base.grad, d) + 0.5 * ad.squaredNorm();
}

double fixed_point_residual(const Problem& p, const ProductPoint& x) {
  const auto params = detail::flip_params(p, "fixed_point_residual");
  const SmoothEval ev = evaluate_smooth(p, x);
  const double step = 1.0 / p.op.lipschitz_bound();
  const ProductPoint moved = x - step * ev.grad;
  return (x - project_gauge_ball(params.gauge, moved, params.tau)).norm();
}

namespace detail {

FlipParams flip_params(const Problem& p, const char* who) {
  if (const auto* f = std::get_if<FlipSum>(&p.formulation))
    return {GaugeSpec{GaugeKind::sum, f->lambda, p.nonneg_S}, f->tau};
  if (const auto* f = std::get_if<FlipMax>(&p.formulation))
    return {GaugeSpec{GaugeKind::max, f->lambda, p.nonneg_S}, f->tau};
  throw InvalidArgument(std::string(who) + ": requires a flipped formulation, got " +
                        formulation_name(p.formulation));
}

RunRecorder::RunRecorder(const SolverConfig& cfg)
    : cfg_(cfg), clock_(cfg.clock ? cfg.clock : std::make_shared<Stopwatch>()) {}

void RunRecorder::record(int iter, const ProductPoint& x, double objective, double residual_norm,
                         double optimality) {
  if (!cfg_.record_trace && !cfg_.observer) return;
  TraceRow row;
  row.iter = cfg_.iteration_offset + iter;
  row.wall_seconds = clock_->elapsed();
  row.objective = objective;
  row.residual = residual_norm;
  if (cfg_.observer) {
    clock_->pause();
    row.ref_error = cfg_.observer(IterationInfo{row.iter, x, objective, residual_norm, optimality});
    clock_->resume();
  }
  if (cfg_.record_trace) trace_.rows.push_back(row);
}

BallProjector::BallProjector(const FlipParams& params, const SolverConfig& cfg)
    : params_(params), cfg_(cfg), low_rank_(cfg.seed, cfg.randomized_svd, cfg.svd) {}

Eigen::Index BallProjector::rank_cap(int iteration) const {
  if (!cfg_.randomized_svd || iteration >= 2) return 0;
  return cfg_.svd_rank_limit_first_iters;
}

Mat BallProjector::project_low_rank(const Mat& l, int iteration) {
  const Eigen::Index cap = rank_cap(iteration);
  Mat out = low_rank_.project_nuclear_ball(l, params_.tau, cap);
  last_exact_ = low_rank_.last_exact();
  return out;
}

Mat BallProjector::project_sparse(const Mat& s) const {
  const double radius = params_.tau / params_.gauge.lambda;
  return params_.gauge.nonneg_S ? project_l1_ball_nonneg(s, radius) : project_l1_ball(s, radius);
}

ProductPoint BallProjector::project(const ProductPoint& x, int iteration) {
  if (params_.gauge.kind == GaugeKind::sum) {
    last_exact_ = true;
    return project_sum_ball(x, params_.gauge.lambda, params_.tau, params_.gauge.nonneg_S);
  }
  Mat l = project_low_rank(x.L, iteration);
  return ProductPoint(std::move(l), project_sparse(x.S));
}

SolveResult trivial_result(const Problem& p, const SolverConfig& cfg) {
  SolveResult res;
  res.point = ProductPoint::zeros(p.rows(), p.cols());
  const SmoothEval ev = evaluate_smooth(p, res.point);
  res.objective = ev.value;
  res.residual_norm = ev.residual.norm();
  res.iterations = 0;
  res.status = SolveStatus::trivial;
  res.optimality = 0.0;
  RunRecorder rec(cfg);
  rec.record(0, res.point, res.objective, res.residual_norm, 0.0);
  res.trace = rec.take_trace();
  return res;
}

}  // namespace detail
}  // namespace spcp
