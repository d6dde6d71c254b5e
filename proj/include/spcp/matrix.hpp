#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <random>

namespace spcp {

// Dense storage is column-major internally; every file format and external
// view is row-major (see matrix_io.hpp).
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class NormKind { nuclear, l1, linf, fro, spectral };

// Seeded 64-bit generator that counts how many raw words it has produced.
// Satisfies UniformRandomBitGenerator so it plugs into <random> distributions.
class Rng {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

  result_type operator()() {
    ++position_;
    return engine_();
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

  double normal();
  double uniform(double lo, double hi);
  double exponential(double mean);
  std::uint64_t below(std::uint64_t bound);  // uniform integer in [0, bound)

 private:
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
};

struct SvdResult {
  Mat U;      // m x k, orthonormal columns
  Vec sigma;  // length k, non-increasing
  Mat V;      // n x k, orthonormal columns
  Eigen::Index rank_used = 0;

  Mat reconstruct() const;
};

double matrix_norm(const Mat& a, NormKind kind);

double nuclear_norm(const Mat& a);
double spectral_norm(const Mat& a);

Vec singular_values(const Mat& a);

// Thin SVD, k = min(m, n).
SvdResult full_svd(const Mat& a);

// Range-finder SVD with a Gaussian test matrix of width k + oversample and
// `power_iters` rounds of re-orthonormalised subspace iteration.
SvdResult randomized_svd(const Mat& a, Eigen::Index k, Eigen::Index oversample, int power_iters,
                         Rng& rng);

struct AdaptiveSvdOptions {
  Eigen::Index start_rank = 10;
  Eigen::Index oversample = 10;
  int power_iters = 2;
  // Hard cap on the computed rank; 0 means min(m, n).
  Eigen::Index max_rank = 0;
};

// Truncated SVD whose rank doubles from `start_rank` until `sufficient`
// accepts the result, the smallest retained singular value drops below
// 1e-10 of the largest, or the cap is reached. Falls back to a dense SVD
// once the sketch would cover the full dimension.
SvdResult adaptive_svd(const Mat& a, const std::function<bool(const SvdResult&)>& sufficient,
                       const AdaptiveSvdOptions& opts, Rng& rng);

Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// Orthonormal basis for the column span of `a` (thin Householder QR, same
// number of columns as `a`).
Mat orthonormalize(const Mat& a);

inline bool all_finite(const Mat& a) { return a.allFinite(); }

}  // namespace spcp
