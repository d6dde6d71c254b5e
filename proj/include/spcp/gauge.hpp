#pragma once

#include "spcp/matrix.hpp"
#include "spcp/operators.hpp"

namespace spcp {

enum class GaugeKind { sum, max };

// phi_sum(L, S) = |L|_* + lambda |S|_1
// phi_max(L, S) = max(|L|_*, lambda |S|_1)
// With nonneg_S the gauge is +inf unless S >= 0 entrywise.
struct GaugeSpec {
  GaugeKind kind = GaugeKind::max;
  double lambda = 1.0;
  bool nonneg_S = false;

  void validate() const;
};

double gauge_value(const GaugeSpec& g, const ProductPoint& x);

// Polar gauge: support function of the unit ball of g.
//   sum: max(|Z1|_2, h(Z2) / lambda)
//   max: |Z1|_2 + h(Z2) / lambda
// where h = |.|_inf, or max(0, max_ij Z2_ij) under the non-negativity cone.
double polar_gauge_value(const GaugeSpec& g, const ProductPoint& z);

// Euclidean projections. Thresholds are found by sort-and-scan, O(d log d).
Vec project_l1_ball(const Vec& x, double tau);
Vec project_scaled_l1_ball(const Vec& x, const Vec& alpha, double tau);
Vec project_l1_ball_nonneg(const Vec& x, double tau);

// Threshold theta >= 0 with sum_i alpha_i max(|x_i| - theta alpha_i, 0) = tau,
// or 0 when x is already inside the ball.
double scaled_l1_threshold(const Vec& x, const Vec& alpha, double tau);
double l1_threshold(const Vec& x, double tau);

Mat project_nuclear_ball(const Mat& a, double tau);

ProductPoint project_sum_ball(const ProductPoint& x, double lambda, double tau,
                              bool nonneg_S = false);
ProductPoint project_max_ball(const ProductPoint& x, double lambda, double tau,
                              bool nonneg_S = false);
ProductPoint project_gauge_ball(const GaugeSpec& g, const ProductPoint& x, double tau);

Vec prox_l1(const Vec& x, double t);
Mat prox_l1(const Mat& x, double t);
// prox of t|.|_1 plus the indicator of the non-negative orthant.
Mat prox_l1_nonneg(const Mat& x, double t);
Mat prox_nuclear(const Mat& a, double t);

// l1-ball projection of a matrix viewed as a vector of its entries.
Mat project_l1_ball(const Mat& a, double tau);
Mat project_l1_ball_nonneg(const Mat& a, double tau);

// Nuclear-norm projection and singular value thresholding backed by a
// truncated SVD whose rank grows until the discarded tail provably cannot
// change the answer (sigma_k at or below the threshold). The last
// retained rank seeds the next call.
class LowRankOps {
 public:
  LowRankOps(std::uint64_t seed, bool randomized = true, AdaptiveSvdOptions opts = {});

  // rank_cap > 0 limits the computed rank; the result stays feasible but
  // may no longer be the exact projection.
  Mat project_nuclear_ball(const Mat& a, double tau, Eigen::Index rank_cap = 0);
  Mat prox_nuclear(const Mat& a, double t, Eigen::Index rank_cap = 0);

  Eigen::Index last_rank() const { return last_rank_; }
  Eigen::Index last_svd_rank() const { return last_svd_rank_; }
  // Nuclear norm of the most recent output.
  double last_nuclear() const { return last_nuclear_; }
  // True when the most recent output is the exact projection / prox, i.e.
  // the discarded spectral tail could not have contributed.
  bool last_exact() const { return last_exact_; }

  // Sketched singular vectors are accurate only to the sketch's subspace
  // error, so outputs certify optimality only in dense mode.
  bool randomized() const { return randomized_; }
  void use_dense() { randomized_ = false; }

 private:
  SvdResult decompose(const Mat& a, const std::function<bool(const SvdResult&)>& enough,
                      Eigen::Index rank_cap);

  bool randomized_;
  AdaptiveSvdOptions opts_;
  Rng rng_;
  Eigen::Index last_rank_ = 0;
  Eigen::Index last_svd_rank_ = 0;
  double last_nuclear_ = 0.0;
  bool last_exact_ = true;
};

}  // namespace spcp
