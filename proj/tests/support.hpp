#pragma once

// Random instances and independent reference implementations shared by the
// unit tests and the acceptance binary. Nothing here calls the library's
// projection or SVD code paths; oracles use JacobiSVD and bisection.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "spcp/gauge.hpp"
#include "spcp/matrix.hpp"
#include "spcp/operators.hpp"

namespace spcp::testing {

inline Mat random_mat(Eigen::Index m, Eigen::Index n, Rng& rng, double scale = 1.0) {
  return scale * gaussian_matrix(m, n, rng);
}

inline Vec random_vec(Eigen::Index d, Rng& rng, double scale = 1.0) {
  Vec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = scale * rng.normal();
  return v;
}

inline ProductPoint random_point(Eigen::Index m, Eigen::Index n, Rng& rng, double scale = 1.0) {
  return ProductPoint(random_mat(m, n, rng, scale), random_mat(m, n, rng, scale));
}

inline Mat low_rank_mat(Eigen::Index m, Eigen::Index n, Eigen::Index r, Rng& rng) {
  return gaussian_matrix(m, r, rng) * gaussian_matrix(r, n, rng);
}

inline Mat sparse_mat(Eigen::Index m, Eigen::Index n, Eigen::Index count, Rng& rng, double scale = 1.0) {
  Mat s = Mat::Zero(m, n);
  for (Eigen::Index k = 0; k < count; ++k)
    s(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m))),
      static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))) = scale * rng.normal();
  return s;
}

// Spectrum through a different SVD algorithm than the library.
inline Vec jacobi_singular_values(const Mat& a) {
  if (a.size() == 0) return Vec();
  return Eigen::JacobiSVD<Mat>(a).singularValues();
}

inline double jacobi_nuclear(const Mat& a) { return jacobi_singular_values(a).sum(); }
inline double jacobi_spectral(const Mat& a) {
  const Vec s = jacobi_singular_values(a);
  return s.size() ? s(0) : 0.0;
}

// ---------------------------------------------------------------------------
// Threshold oracles by bisection.

// theta with sum_i alpha_i max(|x_i| - theta alpha_i, 0) = tau.
inline double bisect_scaled_theta(const Vec& x, const Vec& alpha, double tau) {
  auto mass = [&](double theta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      s += alpha(i) * std::max(std::abs(x(i)) - theta * alpha(i), 0.0);
    return s;
  };
  if (mass(0.0) <= tau) return 0.0;
  double lo = 0.0;
  double hi = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) hi = std::max(hi, std::abs(x(i)) / alpha(i));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > tau ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline Vec oracle_scaled_l1(const Vec& x, const Vec& alpha, double tau) {
  const double theta = bisect_scaled_theta(x, alpha, tau);
  Vec y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double mag = std::max(std::abs(x(i)) - theta * alpha(i), 0.0);
    y(i) = x(i) < 0 ? -mag : mag;
  }
  return y;
}

inline Vec oracle_l1(const Vec& x, double tau) { return oracle_scaled_l1(x, Vec::Ones(x.size()), tau); }

// Projection onto {y >= 0, sum y <= tau} from its KKT form y = max(x - theta, 0).
inline Vec oracle_l1_nonneg(const Vec& x, double tau) {
  auto mass = [&](double theta) { return (x.array() - theta).cwiseMax(0.0).sum(); };
  double theta = 0.0;
  if (mass(0.0) > tau) {
    double lo = 0.0;
    double hi = x.size() ? x.maxCoeff() : 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mass(mid) > tau ? lo : hi) = mid;
    }
    theta = 0.5 * (lo + hi);
  }
  return (x.array() - theta).cwiseMax(0.0).matrix();
}

inline Mat vec_to_mat(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}
inline Vec mat_to_vec(const Mat& a) { return Eigen::Map<const Vec>(a.data(), a.size()); }

inline Mat oracle_l1_mat(const Mat& a, double tau) {
  return vec_to_mat(oracle_l1(mat_to_vec(a), tau), a.rows(), a.cols());
}

inline Mat oracle_nuclear(const Mat& a, double tau) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec s = oracle_l1(svd.singularValues(), tau);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

inline ProductPoint oracle_max_ball(const ProductPoint& x, double lambda, double tau) {
  return ProductPoint(oracle_nuclear(x.L, tau), oracle_l1_mat(x.S, tau / lambda));
}

// Projection onto {|L|_* + lambda |S|_1 <= tau} by projected gradient descent
// over the budget split t in [0, tau]: the point is (P_nuc(L, t),
// P_l1(S, (tau - t) / lambda)) and the squared distance is convex in t with
// derivative -theta_L(t) + theta_S((tau - t) / lambda) / lambda.
struct SumBallOracle {
  ProductPoint point;
  double split = 0.0;
  int iterations = 0;
};

inline SumBallOracle oracle_sum_ball(const ProductPoint& x, double lambda, double tau, int max_iters = 50000) {
  Eigen::JacobiSVD<Mat> svd(x.L, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec sigma = svd.singularValues();
  const Vec s = mat_to_vec(x.S);
  const Vec ones_sigma = Vec::Ones(sigma.size());
  const Vec ones_s = Vec::Ones(s.size());

  SumBallOracle out;
  if (sigma.sum() + lambda * s.cwiseAbs().sum() <= tau) {
    out.point = x;
    return out;
  }
  auto deriv = [&](double t) {
    const double theta_L = bisect_scaled_theta(sigma, ones_sigma, t);
    const double theta_S = bisect_scaled_theta(s, ones_s, (tau - t) / lambda);
    return -theta_L + theta_S / lambda;
  };
  const double step = 1.0 / (1.0 + 1.0 / (lambda * lambda));
  double t = 0.5 * tau;
  int it = 0;
  for (; it < max_iters; ++it) {
    const double next = std::clamp(t - step * deriv(t), 0.0, tau);
    const bool done = std::abs(next - t) <= 1e-15 * std::max(1.0, tau);
    t = next;
    if (done) break;
  }
  out.split = t;
  out.iterations = it;
  const Vec sig_out = oracle_l1(sigma, t);
  out.point = ProductPoint(svd.matrixU() * sig_out.asDiagonal() * svd.matrixV().transpose(),
                           vec_to_mat(oracle_l1(s, (tau - t) / lambda), x.rows(), x.cols()));
  return out;
}

// Lower bound |Y|^2 / phi°(Y, Y) on the smallest gauge of any exact split
// L + S = Y; balls of smaller radius leave a positive misfit.
inline double split_radius_lower_bound(const GaugeSpec& g, const Mat& Y) {
  return Y.squaredNorm() / polar_gauge_value(g, ProductPoint(Y, Y));
}

// ---------------------------------------------------------------------------
// Sampled support function of the unit gauge ball: max <x, z> over feasible
// points built from rank-one and single-entry atoms.

inline double sampled_polar(const GaugeSpec& g, const ProductPoint& z, int samples, Rng& rng) {
  const Eigen::Index m = z.rows();
  const Eigen::Index n = z.cols();
  auto l_atom = [&]() {
    // One power step from a random direction, normalised to nuclear norm 1.
    Vec u = z.L * random_vec(n, rng);
    if (u.norm() == 0.0) u = random_vec(m, rng);
    u.normalize();
    Vec v = z.L.transpose() * u;
    if (v.norm() == 0.0) v = random_vec(n, rng);
    v.normalize();
    return Mat(u * v.transpose());
  };
  auto s_atom = [&]() {
    Mat s = Mat::Zero(m, n);
    const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m)));
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    s(i, j) = (z.S(i, j) >= 0.0 ? 1.0 : -1.0) / g.lambda;
    return s;
  };
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    ProductPoint x = ProductPoint::zeros(m, n);
    if (k % 4 == 3) {
      // Random direction rescaled onto the unit sphere of the gauge.
      x = random_point(m, n, rng);
      const double phi = gauge_value(GaugeSpec{g.kind, g.lambda, false}, x);
      x *= 1.0 / phi;
    } else if (g.kind == GaugeKind::max) {
      x = ProductPoint(l_atom(), s_atom());
    } else {
      const double w = k % 4 == 0 ? 1.0 : k % 4 == 1 ? 0.0 : rng.uniform(0.0, 1.0);
      x = ProductPoint(w * l_atom(), (1.0 - w) * s_atom());
    }
    best = std::max(best, dot(x, z));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Distance from -G to the subdifferential of lambda_L |.|_* + lambda_S |.|_1
// at (L, S) for the sum operator with least squares (G = L + S - Y on both
// blocks).

inline double nuclear_subgradient_distance(const Mat& L, const Mat& M, double lambda) {
  Eigen::JacobiSVD<Mat> svd(L, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec s = svd.singularValues();
  const double cut = 1e-9 * std::max(1.0, s.size() ? s(0) : 0.0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  const Mat U = svd.matrixU().leftCols(r);
  const Mat V = svd.matrixV().leftCols(r);
  const Mat Pu = Mat::Identity(L.rows(), L.rows()) - U * U.transpose();
  const Mat Pv = Mat::Identity(L.cols(), L.cols()) - V * V.transpose();
  const Mat orth = Pu * M * Pv;
  const Mat tangent = M - orth;
  double d2 = (tangent - lambda * U * V.transpose()).squaredNorm();
  const Vec so = jacobi_singular_values(orth);
  for (Eigen::Index i = 0; i < so.size(); ++i) d2 += std::pow(std::max(so(i) - lambda, 0.0), 2);
  return std::sqrt(d2);
}

inline double l1_subgradient_distance(const Mat& S, const Mat& M, double lambda) {
  double d2 = 0.0;
  for (Eigen::Index j = 0; j < S.cols(); ++j)
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
      if (S(i, j) != 0.0)
        d2 += std::pow(M(i, j) - lambda * (S(i, j) > 0 ? 1.0 : -1.0), 2);
      else
        d2 += std::pow(std::max(std::abs(M(i, j)) - lambda, 0.0), 2);
    }
  return std::sqrt(d2);
}

inline double lagrangian_subgradient_residual(const Mat& Y, const ProductPoint& x, double lambda_L,
                                              double lambda_S) {
  const Mat M = -(x.L + x.S - Y);
  const double dl = nuclear_subgradient_distance(x.L, M, lambda_L);
  const double ds = l1_subgradient_distance(x.S, M, lambda_S);
  return std::sqrt(dl * dl + ds * ds);
}

}  // namespace spcp::testing
