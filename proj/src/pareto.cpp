#include "spcp/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "spcp/error.hpp"

namespace spcp {

namespace {

Problem flipped(const Problem& p, double tau) {
  const GaugeSpec g = p.gauge();
  Formulation f = g.kind == GaugeKind::max ? Formulation(FlipMax{g.lambda, tau})
                                           : Formulation(FlipSum{g.lambda, tau});
  return Problem(p.Y, p.op, p.rho, f, p.nonneg_S);
}

}  // namespace

ValuePoint eval_value_fn(const Problem& p, double tau, const ProductPoint& warm,
                         const SolverConfig& cfg) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidArgument("eval_value_fn: tau must be >= 0");
  const Problem sub = flipped(p, tau);
  ValuePoint out;
  out.solve = p.gauge().kind == GaugeKind::max ? solve_flip_qn(sub, warm, cfg)
                                               : solve_flip_spg(sub, warm, cfg);
  out.value = out.solve.objective;
  return out;
}

double value_fn_derivative(const Problem& p, const ProductPoint& sol) {
  const SmoothEval ev = evaluate_smooth(p, sol);
  return -polar_gauge_value(p.gauge(), ev.grad);
}

RootFindResult find_pareto_root(const ValueEvaluator& v, double target, const RootFindOptions& opts) {
  if (!(target >= 0.0)) throw InvalidArgument("find_pareto_root: target must be >= 0");
  RootFindResult out;
  const double tol = opts.rel_tol * std::max(target, 1e-12);

  auto sample = [&](double tau) {
    const ValueSample s = v(tau);
    out.taus.push_back(tau);
    out.values.push_back(s.value);
    out.derivatives.push_back(s.derivative);
    ++out.evaluations;
    out.tau = tau;
    out.value = s.value;
    return s;
  };

  double tau = 0.0;
  ValueSample cur = sample(tau);
  double lo = 0.0;  // largest tau seen with v > target
  double hi = std::numeric_limits<double>::infinity();
  int doublings = 0;

  while (true) {
    if (std::abs(cur.value - target) <= tol || (tau == 0.0 && cur.value <= target)) {
      out.converged = true;
      return out;
    }
    if (out.evaluations >= opts.max_evaluations) return out;

    if (cur.value > target)
      lo = std::max(lo, tau);
    else
      hi = std::min(hi, tau);

    double next = std::numeric_limits<double>::quiet_NaN();
    if (cur.derivative < 0.0) next = tau - (cur.value - target) / cur.derivative;
    const bool inside = std::isfinite(next) && next > lo && next < hi;
    if (!inside) {
      if (std::isfinite(hi)) {
        next = 0.5 * (lo + hi);
      } else {
        if (++doublings > opts.max_doublings)
          throw ConvergenceError("find_pareto_root: no upper bracket after repeated doubling");
        next = tau > 0.0 ? 2.0 * tau : 1.0;
      }
    }
    if (std::isfinite(hi) && hi - lo <= 1e-14 * std::max(hi, 1e-300))
      throw ConvergenceError(
          "find_pareto_root: bracket collapsed; subproblem tolerances are inconsistent with the target");
    tau = next;
    cur = sample(tau);
  }
}

double constrained_eps(const Problem& p) {
  if (const auto* f = std::get_if<ConstrainedSum>(&p.formulation)) return f->eps;
  if (const auto* f = std::get_if<ConstrainedMax>(&p.formulation)) return f->eps;
  throw InvalidArgument("solve_constrained: requires a constrained formulation, got " +
                        formulation_name(p.formulation));
}

ConstrainedResult solve_constrained(const Problem& p, const SolverConfig& cfg,
                                    const RootFindOptions& opts) {
  return solve_constrained(p, p.rho.level_at_radius(constrained_eps(p)), cfg, opts);
}

ConstrainedResult solve_constrained(const Problem& p, double target, const SolverConfig& cfg,
                                    const RootFindOptions& opts) {
  constrained_eps(p);  // validates the formulation
  if (!(target >= 0.0) || !std::isfinite(target))
    throw InvalidArgument("solve_constrained: target must be >= 0");
  cfg.validate();

  const GaugeSpec gauge = p.gauge();
  ConstrainedResult out;
  out.target = target;
  out.history.warm_start = ProductPoint::zeros(p.rows(), p.cols());

  auto clock = cfg.clock ? cfg.clock : std::make_shared<Stopwatch>();
  SolveResult last;
  last.point = out.history.warm_start;
  int inner_iterations = 0;
  int solves = 0;

  ValueEvaluator evaluator = [&](double tau) -> ValueSample {
    ValueSample s{};
    if (tau == 0.0) {
      last = SolveResult{};
      last.point = ProductPoint::zeros(p.rows(), p.cols());
      const SmoothEval ev = evaluate_smooth(p, last.point);
      last.objective = ev.value;
      last.residual_norm = ev.residual.norm();
      last.status = SolveStatus::trivial;
      TraceRow row;
      row.iter = inner_iterations;
      row.wall_seconds = clock->elapsed();
      row.objective = ev.value;
      row.residual = last.residual_norm;
      if (cfg.observer) {
        clock->pause();
        row.ref_error = cfg.observer(IterationInfo{row.iter, last.point, ev.value, row.residual, 0.0});
        clock->resume();
      }
      if (cfg.record_trace) out.solve.trace.rows.push_back(row);
      s.value = ev.value;
      s.derivative = -polar_gauge_value(gauge, ev.grad);
    } else {
      SolverConfig sub = cfg;
      // Inexact Newton: loose early subproblems, tightening geometrically.
      sub.tol = std::max(cfg.tol, 1e-4 * std::pow(0.1, solves));
      sub.clock = clock;
      sub.iteration_offset = inner_iterations;
      ValuePoint vp = eval_value_fn(p, tau, out.history.warm_start, sub);
      ++solves;
      inner_iterations += vp.solve.iterations;
      for (const TraceRow& row : vp.solve.trace.rows) out.solve.trace.rows.push_back(row);
      out.history.warm_start = vp.solve.point;
      s.value = vp.value;
      s.derivative = value_fn_derivative(p, vp.solve.point);
      last = std::move(vp.solve);
    }
    out.history.tau_history.push_back(tau);
    out.history.value_history.push_back(s.value);
    out.history.deriv_history.push_back(s.derivative);
    return s;
  };

  const RootFindResult root = find_pareto_root(evaluator, target, opts);
  out.tau = root.tau;
  out.value_evaluations = root.evaluations;
  out.converged = root.converged;

  SolveTrace trace = std::move(out.solve.trace);
  out.solve = std::move(last);
  out.solve.trace = std::move(trace);
  out.solve.iterations = inner_iterations;
  out.solve.objective = gauge_value(gauge, out.solve.point);
  out.solve.residual_norm = (p.op.apply(out.solve.point) - p.Y).norm();
  if (!out.converged) out.solve.status = SolveStatus::max_iterations;
  return out;
}

double lambda_max_from_oracle(const Mat& L, const Mat& S) {
  const double l1 = S.cwiseAbs().sum();
  if (!(l1 > 0.0)) throw InvalidArgument("lambda_max_from_oracle: sparse part is zero");
  return nuclear_norm(L) / l1;
}

}  // namespace spcp
