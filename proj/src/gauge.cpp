#include "spcp/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "spcp/error.hpp"

namespace spcp {

namespace {

void check_radius(double tau, const char* who) {
  if (!(tau >= 0.0) || std::isnan(tau)) throw InvalidArgument(std::string(who) + ": negative radius");
}

void check_lambda(double lambda, const char* who) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidArgument(std::string(who) + ": lambda must be positive and finite");
}

Eigen::Map<const Vec> as_vec(const Mat& a) { return Eigen::Map<const Vec>(a.data(), a.size()); }

Mat as_mat(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

double sparse_support(const Mat& z, bool nonneg) {
  if (z.size() == 0) return 0.0;
  if (nonneg) return std::max(0.0, z.maxCoeff());
  return z.cwiseAbs().maxCoeff();
}

Vec soft_threshold(const Vec& x, const Vec& alpha, double theta) {
  Vec y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double mag = std::abs(x(i)) - theta * alpha(i);
    y(i) = mag > 0.0 ? std::copysign(mag, x(i)) : 0.0;
  }
  return y;
}

// Projects a non-negative, non-increasing spectrum onto the l1 ball.
Vec project_spectrum(const Vec& sigma, double tau) { return project_l1_ball(sigma, tau); }

}  // namespace

void GaugeSpec::validate() const { check_lambda(lambda, "GaugeSpec"); }

double gauge_value(const GaugeSpec& g, const ProductPoint& x) {
  g.validate();
  if (g.nonneg_S && x.S.size() > 0 && x.S.minCoeff() < 0.0)
    return std::numeric_limits<double>::infinity();
  const double low_rank = nuclear_norm(x.L);
  const double sparse = g.lambda * x.S.cwiseAbs().sum();
  return g.kind == GaugeKind::sum ? low_rank + sparse : std::max(low_rank, sparse);
}

double polar_gauge_value(const GaugeSpec& g, const ProductPoint& z) {
  g.validate();
  const double low_rank = spectral_norm(z.L);
  const double sparse = sparse_support(z.S, g.nonneg_S) / g.lambda;
  return g.kind == GaugeKind::sum ? std::max(low_rank, sparse) : low_rank + sparse;
}

double scaled_l1_threshold(const Vec& x, const Vec& alpha, double tau) {
  check_radius(tau, "scaled_l1_threshold");
  if (x.size() != alpha.size()) throw InvalidArgument("scaled_l1_threshold: size mismatch");
  for (Eigen::Index i = 0; i < alpha.size(); ++i)
    if (!(alpha(i) > 0.0)) throw InvalidArgument("scaled_l1_threshold: weights must be positive");

  const Eigen::Index d = x.size();
  if ((alpha.array() * x.array().abs()).sum() <= tau) return 0.0;

  Vec ratio = x.cwiseAbs().cwiseQuotient(alpha);
  if (tau == 0.0) return ratio.maxCoeff();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return ratio(a) > ratio(b); });

  double weighted = 0.0;  // sum alpha_i |x_i| over the active set
  double mass = 0.0;      // sum alpha_i^2 over the active set
  double theta = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const Eigen::Index i = order[j];
    weighted += alpha(i) * std::abs(x(i));
    mass += alpha(i) * alpha(i);
    theta = (weighted - tau) / mass;
    const double next = j + 1 < order.size() ? ratio(order[j + 1]) : 0.0;
    if (next <= theta) break;
  }
  return std::max(theta, 0.0);
}

double l1_threshold(const Vec& x, double tau) {
  return scaled_l1_threshold(x, Vec::Ones(x.size()), tau);
}

Vec project_scaled_l1_ball(const Vec& x, const Vec& alpha, double tau) {
  const double theta = scaled_l1_threshold(x, alpha, tau);
  if (theta == 0.0) return x;
  return soft_threshold(x, alpha, theta);
}

Vec project_l1_ball(const Vec& x, double tau) {
  return project_scaled_l1_ball(x, Vec::Ones(x.size()), tau);
}

Vec project_l1_ball_nonneg(const Vec& x, double tau) {
  check_radius(tau, "project_l1_ball_nonneg");
  return project_l1_ball(Vec(x.cwiseMax(0.0)), tau);
}

Mat project_l1_ball(const Mat& a, double tau) {
  return as_mat(project_l1_ball(Vec(as_vec(a)), tau), a.rows(), a.cols());
}

Mat project_l1_ball_nonneg(const Mat& a, double tau) {
  return as_mat(project_l1_ball_nonneg(Vec(as_vec(a)), tau), a.rows(), a.cols());
}

Mat project_nuclear_ball(const Mat& a, double tau) {
  check_radius(tau, "project_nuclear_ball");
  if (a.size() == 0) return a;
  if (tau == 0.0) return Mat::Zero(a.rows(), a.cols());
  SvdResult svd = full_svd(a);
  if (svd.sigma.sum() <= tau) return a;
  const Vec shrunk = project_spectrum(svd.sigma, tau);
  return svd.U * shrunk.asDiagonal() * svd.V.transpose();
}

ProductPoint project_sum_ball(const ProductPoint& x, double lambda, double tau, bool nonneg_S) {
  check_lambda(lambda, "project_sum_ball");
  check_radius(tau, "project_sum_ball");
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  if (tau == 0.0) return ProductPoint::zeros(m, n);

  const Mat s_in = nonneg_S ? Mat(x.S.cwiseMax(0.0)) : x.S;
  SvdResult svd = full_svd(x.L);
  const Eigen::Index k = svd.sigma.size();

  // Joint vector (sigma; vec S) with weights (1, ..., 1, lambda, ..., lambda).
  Vec joint(k + s_in.size());
  joint.head(k) = svd.sigma;
  joint.tail(s_in.size()) = as_vec(s_in);
  Vec weights(joint.size());
  weights.head(k).setOnes();
  weights.tail(s_in.size()).setConstant(lambda);

  const double theta = scaled_l1_threshold(joint, weights, tau);
  if (theta == 0.0) return ProductPoint(x.L, s_in);
  const Vec shrunk = soft_threshold(joint, weights, theta);
  Mat l_out = svd.U * shrunk.head(k).asDiagonal() * svd.V.transpose();
  return ProductPoint(std::move(l_out), as_mat(shrunk.tail(s_in.size()), m, n));
}

ProductPoint project_max_ball(const ProductPoint& x, double lambda, double tau, bool nonneg_S) {
  check_lambda(lambda, "project_max_ball");
  check_radius(tau, "project_max_ball");
  Mat s_out = nonneg_S ? project_l1_ball_nonneg(x.S, tau / lambda) : project_l1_ball(x.S, tau / lambda);
  return ProductPoint(project_nuclear_ball(x.L, tau), std::move(s_out));
}

ProductPoint project_gauge_ball(const GaugeSpec& g, const ProductPoint& x, double tau) {
  return g.kind == GaugeKind::sum ? project_sum_ball(x, g.lambda, tau, g.nonneg_S)
                                  : project_max_ball(x, g.lambda, tau, g.nonneg_S);
}

Vec prox_l1(const Vec& x, double t) {
  check_radius(t, "prox_l1");
  return soft_threshold(x, Vec::Ones(x.size()), t);
}

Mat prox_l1(const Mat& x, double t) {
  check_radius(t, "prox_l1");
  return x.unaryExpr([t](double v) {
    const double mag = std::abs(v) - t;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

Mat prox_l1_nonneg(const Mat& x, double t) {
  check_radius(t, "prox_l1_nonneg");
  return (x.array() - t).cwiseMax(0.0).matrix();
}

Mat prox_nuclear(const Mat& a, double t) {
  check_radius(t, "prox_nuclear");
  if (a.size() == 0) return a;
  SvdResult svd = full_svd(a);
  const Vec shrunk = (svd.sigma.array() - t).cwiseMax(0.0).matrix();
  return svd.U * shrunk.asDiagonal() * svd.V.transpose();
}

// ---------------------------------------------------------------------------

LowRankOps::LowRankOps(std::uint64_t seed, bool randomized, AdaptiveSvdOptions opts)
    : randomized_(randomized), opts_(opts), rng_(seed) {}

SvdResult LowRankOps::decompose(const Mat& a, const std::function<bool(const SvdResult&)>& enough,
                                Eigen::Index rank_cap) {
  SvdResult svd;
  if (!randomized_ && rank_cap <= 0) {
    svd = full_svd(a);
  } else {
    AdaptiveSvdOptions opts = opts_;
    opts.max_rank = rank_cap > 0 ? rank_cap : opts_.max_rank;
    if (randomized_) {
      // The previous retained rank plus headroom is a good first guess.
      opts.start_rank = std::max(opts_.start_rank, last_rank_ + opts_.start_rank);
    } else {
      opts.start_rank = std::min(a.rows(), a.cols());
    }
    svd = adaptive_svd(a, enough, opts, rng_);
  }
  last_svd_rank_ = svd.rank_used;
  return svd;
}

Mat LowRankOps::project_nuclear_ball(const Mat& a, double tau, Eigen::Index rank_cap) {
  check_radius(tau, "LowRankOps::project_nuclear_ball");
  if (a.size() == 0) return a;
  if (tau == 0.0) {
    last_rank_ = 0;
    last_nuclear_ = 0.0;
    last_exact_ = true;
    return Mat::Zero(a.rows(), a.cols());
  }
  const Eigen::Index full = std::min(a.rows(), a.cols());
  auto enough = [tau](const SvdResult& r) {
    const double theta = l1_threshold(r.sigma, tau);
    return theta > 0.0 && r.sigma(r.sigma.size() - 1) <= theta;
  };
  SvdResult svd = decompose(a, enough, rank_cap);
  if (svd.rank_used == full && svd.sigma.sum() <= tau) {
    last_rank_ = (svd.sigma.array() > 0.0).count();
    last_nuclear_ = svd.sigma.sum();
    last_exact_ = true;
    return a;
  }
  const Vec shrunk = project_spectrum(svd.sigma, tau);
  last_rank_ = (shrunk.array() > 0.0).count();
  last_nuclear_ = shrunk.sum();
  last_exact_ = last_rank_ < svd.rank_used || svd.rank_used == full ||
                svd.sigma(svd.rank_used - 1) <= 1e-10 * svd.sigma(0);
  return svd.U * shrunk.asDiagonal() * svd.V.transpose();
}

Mat LowRankOps::prox_nuclear(const Mat& a, double t, Eigen::Index rank_cap) {
  check_radius(t, "LowRankOps::prox_nuclear");
  if (a.size() == 0) return a;
  const Eigen::Index full = std::min(a.rows(), a.cols());
  if (t == 0.0) {
    last_rank_ = full;
    last_nuclear_ = nuclear_norm(a);
    last_exact_ = true;
    return a;
  }
  auto enough = [t](const SvdResult& r) { return r.sigma(r.sigma.size() - 1) <= t; };
  SvdResult svd = decompose(a, enough, rank_cap);
  const Vec shrunk = (svd.sigma.array() - t).cwiseMax(0.0).matrix();
  last_rank_ = (shrunk.array() > 0.0).count();
  last_nuclear_ = shrunk.sum();
  last_exact_ = last_rank_ < svd.rank_used || svd.rank_used == full ||
                svd.sigma(svd.rank_used - 1) <= 1e-10 * svd.sigma(0);
  return svd.U * shrunk.asDiagonal() * svd.V.transpose();
}

}  // namespace spcp
