#include "spcp/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "spcp/error.hpp"

namespace spcp {

double Rng::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(*this);
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(*this);
}

double Rng::exponential(double mean) {
  std::exponential_distribution<double> dist(1.0 / mean);
  return dist(*this);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(*this);
}

Mat SvdResult::reconstruct() const { return U * sigma.asDiagonal() * V.transpose(); }

Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Mat g(rows, cols);
  // Fill in row-major order so the draw sequence matches the file layout.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.normal();
  return g;
}

Mat orthonormalize(const Mat& a) {
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ() * Mat::Identity(a.rows(), a.cols());
}

Vec singular_values(const Mat& a) {
  if (a.size() == 0) return Vec();
  Eigen::BDCSVD<Mat> svd(a);
  return svd.singularValues();
}

double nuclear_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  return singular_values(a).sum();
}

namespace {

std::uint64_t content_seed(const Mat& a) {
  // FNV-1a over the raw bit patterns.
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    std::uint64_t bits;
    const double v = a.data()[k];
    std::memcpy(&bits, &v, sizeof bits);
    h ^= bits;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  const double fro = a.norm();
  if (fro == 0.0) return 0.0;
  // Small matrices: a dense SVD is cheap and exact to rounding.
  constexpr Eigen::Index kDenseDim = 64;
  if (std::min(a.rows(), a.cols()) <= kDenseDim) return singular_values(a)(0);

  constexpr int kMaxIters = 200;
  constexpr double kRelTol = 1e-14;

  Rng rng(content_seed(a));
  Vec v(a.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.normal();
  v.normalize();

  double estimate = 0.0;
  for (int it = 0; it < kMaxIters; ++it) {
    Vec u = a * v;
    const double un = u.norm();
    if (un == 0.0) break;
    Vec w = a.transpose() * (u / un);
    const double next = w.norm();
    if (next == 0.0) break;
    v = w / next;
    if (std::abs(next - estimate) <= kRelTol * next) return next;
    estimate = next;
  }
  // Slow convergence (clustered top singular values) or an unlucky start
  // orthogonal to the top singular vector.
  return singular_values(a)(0);
}

double matrix_norm(const Mat& a, NormKind kind) {
  if (a.size() == 0) return 0.0;
  switch (kind) {
    case NormKind::nuclear:
      return nuclear_norm(a);
    case NormKind::l1:
      return a.cwiseAbs().sum();
    case NormKind::linf:
      return a.cwiseAbs().maxCoeff();
    case NormKind::fro:
      return a.norm();
    case NormKind::spectral:
      return spectral_norm(a);
  }
  return 0.0;
}

SvdResult full_svd(const Mat& a) {
  SvdResult out;
  const Eigen::Index k = std::min(a.rows(), a.cols());
  if (k == 0) {
    out.U = Mat(a.rows(), 0);
    out.V = Mat(a.cols(), 0);
    out.sigma = Vec(0);
    return out;
  }
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  out.sigma = svd.singularValues();
  out.rank_used = k;
  return out;
}

SvdResult randomized_svd(const Mat& a, Eigen::Index k, Eigen::Index oversample, int power_iters,
                         Rng& rng) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  const Eigen::Index kmax = std::min(m, n);
  if (k < 1 || k > kmax) throw InvalidArgument("randomized_svd: rank out of range");
  if (oversample < 0 || power_iters < 0)
    throw InvalidArgument("randomized_svd: negative oversample or power iterations");

  const Eigen::Index width = std::min(k + oversample, kmax);
  Mat q = orthonormalize(a * gaussian_matrix(n, width, rng));
  for (int it = 0; it < power_iters; ++it) {
    Mat z = orthonormalize(a.transpose() * q);
    q = orthonormalize(a * z);
  }

  Mat b = q.transpose() * a;  // width x n
  Eigen::BDCSVD<Mat> small(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SvdResult out;
  out.U = q * small.matrixU().leftCols(k);
  out.V = small.matrixV().leftCols(k);
  out.sigma = small.singularValues().head(k);
  out.rank_used = k;
  return out;
}

SvdResult adaptive_svd(const Mat& a, const std::function<bool(const SvdResult&)>& sufficient,
                       const AdaptiveSvdOptions& opts, Rng& rng) {
  const Eigen::Index full = std::min(a.rows(), a.cols());
  const Eigen::Index cap = opts.max_rank > 0 ? std::min(opts.max_rank, full) : full;
  Eigen::Index k = std::clamp<Eigen::Index>(opts.start_rank, 1, cap);

  for (;;) {
    SvdResult res;
    if (k + opts.oversample >= full) {
      res = full_svd(a);
      if (k < full) {
        res.U = res.U.leftCols(k).eval();
        res.V = res.V.leftCols(k).eval();
        res.sigma = res.sigma.head(k).eval();
        res.rank_used = k;
      }
    } else {
      res = randomized_svd(a, k, opts.oversample, opts.power_iters, rng);
    }
    if (k >= cap) return res;
    const double largest = res.sigma(0);
    const double smallest = res.sigma(k - 1);
    if (smallest <= 1e-10 * largest || sufficient(res)) return res;
    k = std::min(2 * k, cap);
  }
}

}  // namespace spcp
