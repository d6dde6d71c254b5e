#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "spcp/bench.hpp"
#include "spcp/error.hpp"
#include "spcp/gauge.hpp"
#include "spcp/pareto.hpp"
#include "spcp/solvers.hpp"
#include "support.hpp"

namespace spcp {
namespace {

using testing::random_mat;
using testing::random_point;

using Solver = SolveResult (*)(const Problem&, const ProductPoint&, const SolverConfig&);

struct NamedSolver {
  const char* name;
  Solver fn;
  bool max_only;
};

const NamedSolver kFlipSolvers[] = {
    {"spg", &solve_flip_spg, false},
    {"fista", &solve_flip_fista, false},
    {"qn", &solve_flip_qn, true},
};

ProductPoint zeros_like(const Mat& y) { return ProductPoint::zeros(y.rows(), y.cols()); }

// Random noisy low-rank-plus-sparse data with a ball that binds.
Problem random_flip(Eigen::Index m, Eigen::Index n, GaugeKind kind, Rng& rng) {
  const Mat L0 = testing::low_rank_mat(m, n, 3, rng);
  const Mat S0 = testing::sparse_mat(m, n, m * n / 20, rng, 5.0);
  const Mat Y = L0 + S0 + 0.1 * random_mat(m, n, rng);
  const double lambda = 1.0 / std::sqrt(static_cast<double>(std::max(m, n)));
  const GaugeSpec g{kind, lambda, false};
  const double tau = 0.6 * gauge_value(g, ProductPoint(L0, S0));
  if (kind == GaugeKind::sum) return Problem(Y, FlipSum{lambda, tau});
  return Problem(Y, FlipMax{lambda, tau});
}

TEST(FlipSolvers, ZeroRadiusGivesZero) {
  Rng rng(61);
  const Mat Y = random_mat(6, 5, rng);
  for (const auto& s : kFlipSolvers) {
    const Problem p(Y, FlipMax{1.0, 0.0});
    const SolveResult r = s.fn(p, zeros_like(Y), {});
    EXPECT_EQ(r.point.norm(), 0.0) << s.name;
    EXPECT_DOUBLE_EQ(r.objective, 0.5 * Y.squaredNorm()) << s.name;
    EXPECT_EQ(r.status, SolveStatus::trivial);
    if (!s.max_only) {
      const SolveResult rs = s.fn(Problem(Y, FlipSum{1.0, 0.0}), zeros_like(Y), {});
      EXPECT_EQ(rs.point.norm(), 0.0) << s.name;
    }
  }
}

TEST(FlipSolvers, DecomposableDataFitsExactly) {
  Rng rng(62);
  const Mat L0 = testing::low_rank_mat(20, 25, 2, rng);
  const Mat S0 = testing::sparse_mat(20, 25, 15, rng, 3.0);
  const Mat Y = L0 + S0;
  const double lambda = 0.3;
  SolverConfig cfg;
  cfg.tol = 1e-14;
  cfg.max_iters = 20000;
  for (auto kind : {GaugeKind::sum, GaugeKind::max}) {
    const double tau = 1.05 * gauge_value({kind, lambda, false}, ProductPoint(L0, S0));
    const Problem p = kind == GaugeKind::sum ? Problem(Y, FlipSum{lambda, tau}) : Problem(Y, FlipMax{lambda, tau});
    for (const auto& s : kFlipSolvers) {
      if (s.max_only && kind == GaugeKind::sum) continue;
      const SolveResult r = s.fn(p, zeros_like(Y), cfg);
      EXPECT_LE(r.objective, 1e-10 * Y.squaredNorm()) << s.name << " kind " << static_cast<int>(kind);
    }
  }
}

TEST(FlipSolvers, AgreeOnRandomInstances) {
  Rng rng(63);
  SolverConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iters = 10000;
  for (int trial = 0; trial < 4; ++trial) {
    for (auto kind : {GaugeKind::sum, GaugeKind::max}) {
      const Problem p = random_flip(30, 40, kind, rng);
      const ProductPoint x0 = zeros_like(p.Y);
      const double f_spg = solve_flip_spg(p, x0, cfg).objective;
      const double f_fista = solve_flip_fista(p, x0, cfg).objective;
      EXPECT_LE(std::abs(f_spg - f_fista), 1e-5 * std::abs(f_fista));
      if (kind == GaugeKind::max) {
        const double f_qn = solve_flip_qn(p, x0, cfg).objective;
        EXPECT_LE(std::abs(f_qn - f_spg), 1e-5 * std::abs(f_spg));
      }
    }
  }
}

TEST(FlipSolvers, PlainProximalGradientIsMonotone) {
  Rng rng(64);
  SolverConfig cfg;
  cfg.accelerate = false;
  cfg.tol = 1e-12;
  cfg.max_iters = 300;
  for (auto kind : {GaugeKind::sum, GaugeKind::max}) {
    const Problem p = random_flip(20, 24, kind, rng);
    const SolveResult r = solve_flip_fista(p, zeros_like(p.Y), cfg);
    ASSERT_GT(r.trace.rows.size(), 5u);
    for (std::size_t i = 1; i < r.trace.rows.size(); ++i)
      EXPECT_LE(r.trace.rows[i].objective, r.trace.rows[i - 1].objective * (1 + 1e-14) + 1e-300);
  }
}

TEST(FlipSolvers, QnRejectsSumBall) {
  Rng rng(65);
  const Problem p = random_flip(8, 9, GaugeKind::sum, rng);
  EXPECT_THROW(solve_flip_qn(p, zeros_like(p.Y), {}), InvalidArgument);
}

TEST(FlipSolvers, RejectWrongFormulation) {
  const Mat Y = Mat::Ones(3, 3);
  const Problem lag(Y, Lagrangian{1.0, 1.0});
  for (const auto& s : kFlipSolvers) EXPECT_THROW(s.fn(lag, zeros_like(Y), {}), InvalidArgument) << s.name;
  EXPECT_THROW(solve_lag_qn(Problem(Y, FlipMax{1.0, 1.0}), zeros_like(Y), {}), InvalidArgument);
}

TEST(ProblemValidation, RejectsBadParameters) {
  const Mat Y = Mat::Ones(2, 2);
  EXPECT_THROW(Problem(Y, FlipMax{1.0, -1.0}), InvalidArgument);
  EXPECT_THROW(Problem(Y, FlipSum{0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(Problem(Y, Lagrangian{1.0, 0.0}), InvalidArgument);
  EXPECT_THROW(Problem(Y, ConstrainedMax{1.0, -0.5}), InvalidArgument);
  EXPECT_NO_THROW(Problem(Y, ConstrainedSum{1.0, 0.0}));
  EXPECT_THROW(Problem(Y, LinearOp::sum(3, 2), Penalty::least_squares(), FlipMax{1.0, 1.0}), InvalidArgument);
}

TEST(SolverConfigTest, ValidatesScaling) {
  SolverConfig cfg;
  cfg.qn_scale = 2.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.qn_scale = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.qn_scale = 1.25;
  cfg.tol = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(FlipSolvers, IterationCapReportsBestIterate) {
  Rng rng(66);
  const Problem p = random_flip(20, 20, GaugeKind::max, rng);
  SolverConfig cfg;
  cfg.max_iters = 3;
  for (const auto& s : kFlipSolvers) {
    const SolveResult r = s.fn(p, zeros_like(p.Y), cfg);
    EXPECT_EQ(r.status, SolveStatus::max_iterations) << s.name;
    EXPECT_FALSE(r.converged());
    EXPECT_EQ(r.iterations, 3);
    EXPECT_TRUE(std::isfinite(r.objective));
    EXPECT_LE(r.objective, 0.5 * p.Y.squaredNorm());
    EXPECT_NEAR(r.objective, evaluate_smooth(p, r.point).value, 1e-12 * r.objective);
  }
}

// ---------------------------------------------------------------------------
// Invariants.

TEST(SolverInvariants, EveryIterateFeasible) {
  Rng rng(67);
  for (auto kind : {GaugeKind::sum, GaugeKind::max}) {
    const Problem p = random_flip(25, 30, kind, rng);
    const GaugeSpec g = p.gauge();
    const double tau = kind == GaugeKind::sum ? std::get<FlipSum>(p.formulation).tau
                                              : std::get<FlipMax>(p.formulation).tau;
    for (const auto& s : kFlipSolvers) {
      if (s.max_only && kind == GaugeKind::sum) continue;
      SolverConfig cfg;
      cfg.tol = 1e-10;
      double worst = 0.0;
      cfg.observer = [&](const IterationInfo& info) -> std::optional<double> {
        worst = std::max(worst, gauge_value(g, info.point));
        return std::nullopt;
      };
      s.fn(p, random_point(25, 30, rng, 3.0), cfg);
      EXPECT_LE(worst, tau * (1 + 1e-9)) << s.name;
    }
  }
}

TEST(SolverInvariants, BestObjectiveMonotone) {
  Rng rng(68);
  for (auto kind : {GaugeKind::sum, GaugeKind::max}) {
    const Problem p = random_flip(25, 30, kind, rng);
    for (const auto& s : kFlipSolvers) {
      if (s.max_only && kind == GaugeKind::sum) continue;
      SolverConfig cfg;
      cfg.tol = 1e-10;
      const SolveResult r = s.fn(p, zeros_like(p.Y), cfg);
      double best = 0.5 * p.Y.squaredNorm();
      for (const TraceRow& row : r.trace.rows) {
        const double next = std::min(best, row.objective);
        EXPECT_LE(next, best);
        best = next;
      }
      // The reported point is the best one seen.
      EXPECT_LE(r.objective, best * (1 + 1e-12) + 1e-14 * p.Y.squaredNorm()) << s.name;
    }
  }
}

TEST(SolverInvariants, FixedPointResidualAtOptimalityExit) {
  Rng rng(69);
  for (auto kind : {GaugeKind::sum, GaugeKind::max}) {
    const Problem p = random_flip(20, 25, kind, rng);
    for (const auto& s : kFlipSolvers) {
      if (s.max_only && kind == GaugeKind::sum) continue;
      SolverConfig cfg;
      cfg.tol = 1e-7;
      cfg.max_iters = 20000;
      cfg.stop_on_objective_change = false;
      const SolveResult r = s.fn(p, zeros_like(p.Y), cfg);
      ASSERT_EQ(r.status, SolveStatus::converged_optimality) << s.name;
      EXPECT_LE(fixed_point_residual(p, r.point), cfg.tol * (1 + r.point.norm())) << s.name;
    }
  }
}

TEST(SolverInvariants, QuadraticExpansionIsExact) {
  Rng rng(70);
  const Mat Y = random_mat(6, 7, rng);
  const Problem p(Y, FlipMax{1.0, 1.0});
  const ProductPoint at = random_point(6, 7, rng);
  for (int k = 0; k < 20; ++k) {
    const ProductPoint x = random_point(6, 7, rng, 2.0);
    const double f = evaluate_smooth(p, x).value;
    EXPECT_NEAR(quadratic_expansion(p, at, x), f, 1e-12 * std::max(1.0, f));
  }
}

TEST(SolverInvariants, TraceClockExcludesObserver) {
  Rng rng(71);
  const Problem p = random_flip(15, 15, GaugeKind::max, rng);
  SolverConfig cfg;
  cfg.max_iters = 5;
  cfg.stop_on_objective_change = false;
  cfg.tol = 1e-300;
  cfg.observer = [](const IterationInfo&) -> std::optional<double> {
    std::this_thread::sleep_for(std::chrono::milliseconds(40));
    return 1.0;
  };
  const SolveResult r = solve_flip_spg(p, zeros_like(p.Y), cfg);
  ASSERT_EQ(r.trace.rows.size(), 5u);
  for (std::size_t i = 1; i < r.trace.rows.size(); ++i)
    EXPECT_GE(r.trace.rows[i].wall_seconds, r.trace.rows[i - 1].wall_seconds);
  EXPECT_LT(r.trace.rows.back().wall_seconds, 0.1);
  EXPECT_EQ(r.trace.rows.back().ref_error, 1.0);
}

// ---------------------------------------------------------------------------

TEST(LagQn, DominantThresholdsGiveZero) {
  Rng rng(72);
  const Mat Y = random_mat(10, 12, rng);
  const Problem p(Y, Lagrangian{1.01 * spectral_norm(Y), 1.01 * Y.cwiseAbs().maxCoeff()});
  const SolveResult r = solve_lag_qn(p, zeros_like(Y), {});
  EXPECT_EQ(r.point.norm(), 0.0);
  EXPECT_DOUBLE_EQ(r.objective, 0.5 * Y.squaredNorm());
}

TEST(LagQn, SubgradientResidualOnRandomInstances) {
  Rng rng(73);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat Y = testing::low_rank_mat(30, 40, 3, rng) + testing::sparse_mat(30, 40, 60, rng, 4.0) +
                  0.05 * random_mat(30, 40, rng);
    const double lL = 0.2 * spectral_norm(Y);
    const double lS = 0.1 * Y.cwiseAbs().maxCoeff();
    const Problem p(Y, Lagrangian{lL, lS});
    SolverConfig cfg;
    cfg.tol = 1e-9;
    cfg.max_iters = 20000;
    cfg.stop_on_objective_change = false;
    const SolveResult r = solve_lag_qn(p, zeros_like(Y), cfg);
    ASSERT_TRUE(r.converged());
    EXPECT_LE(testing::lagrangian_subgradient_residual(Y, r.point, lL, lS), cfg.tol * (1 + Y.norm()));
    const double reg = lL * nuclear_norm(r.point.L) + lS * r.point.S.cwiseAbs().sum();
    EXPECT_NEAR(r.objective, evaluate_smooth(p, r.point).value + reg, 1e-9 * r.objective);
  }
}

TEST(LagQn, RecoversLowRankSparseStructure) {
  SyntheticSpec spec;
  spec.m = 80;
  spec.n = 100;
  spec.rank = 5;
  spec.seed = 3;
  Rng rng(spec.seed);
  const ExponentialData d = gen_exponential_test(spec, rng);
  const Problem p(d.Y, Lagrangian{0.2 * spectral_norm(d.Y), 0.15 * d.Y.cwiseAbs().maxCoeff()});
  SolverConfig cfg;
  cfg.tol = 1e-10;
  const SolveResult r = solve_lag_qn(p, zeros_like(d.Y), cfg);
  const Vec sv = full_svd(r.point.L).sigma;
  const auto rank = (sv.array() > 1e-9 * sv(0)).count();
  const auto nnz = (r.point.S.array() != 0.0).count();
  EXPECT_GT(rank, 0);
  EXPECT_LT(rank, 40);
  EXPECT_LT(static_cast<double>(nnz), 0.05 * 80 * 100);
}

TEST(QnVsFista, QnNeedsFewerIterationsOnExponentialTest) {
  SyntheticSpec spec;
  spec.m = 100;
  spec.n = 120;
  spec.rank = 5;
  spec.seed = 11;
  Rng rng(spec.seed);
  const ExponentialData d = gen_exponential_test(spec, rng);
  // Ball parameters from a Lagrangian split of the same data.
  const Problem lag(d.Y, Lagrangian{0.2 * spectral_norm(d.Y), 0.15 * d.Y.cwiseAbs().maxCoeff()});
  SolverConfig ref_cfg;
  ref_cfg.tol = 1e-12;
  ref_cfg.stop_on_objective_change = false;
  ref_cfg.randomized_svd = false;
  ref_cfg.max_iters = 20000;
  const SolveResult ref = solve_lag_qn(lag, zeros_like(d.Y), ref_cfg);
  const Problem p(d.Y, FlipMax{lambda_max_from_oracle(ref.point.L, ref.point.S), nuclear_norm(ref.point.L)});
  const double f_star = solve_flip_qn(p, zeros_like(d.Y), ref_cfg).objective;

  auto iterations_to_gap = [&](Solver fn) {
    SolverConfig cfg;
    cfg.tol = 1e-12;
    cfg.max_iters = 5000;
    const SolveResult r = fn(p, zeros_like(d.Y), cfg);
    for (const TraceRow& row : r.trace.rows)
      if (row.objective - f_star <= 1e-6 * f_star) return row.iter;
    return std::numeric_limits<int>::max();
  };
  const int qn = iterations_to_gap(&solve_flip_qn);
  const int fista = iterations_to_gap(&solve_flip_fista);
  EXPECT_LT(qn, std::numeric_limits<int>::max());
  EXPECT_LE(qn, fista);
}

}  // namespace
}  // namespace spcp
