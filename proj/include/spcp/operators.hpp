#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include "spcp/matrix.hpp"

namespace spcp {

// A point (L, S) of the product space R^{m x n} x R^{m x n}.
struct ProductPoint {
  Mat L;
  Mat S;

  ProductPoint() = default;
  ProductPoint(Mat l, Mat s);

  static ProductPoint zeros(Eigen::Index rows, Eigen::Index cols);

  Eigen::Index rows() const { return L.rows(); }
  Eigen::Index cols() const { return L.cols(); }

  double squared_norm() const { return L.squaredNorm() + S.squaredNorm(); }
  double norm() const;

  ProductPoint& operator+=(const ProductPoint& o);
  ProductPoint& operator-=(const ProductPoint& o);
  ProductPoint& operator*=(double c);
};

ProductPoint operator+(ProductPoint a, const ProductPoint& b);
ProductPoint operator-(ProductPoint a, const ProductPoint& b);
ProductPoint operator*(double c, ProductPoint a);
double dot(const ProductPoint& a, const ProductPoint& b);
inline double dot(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

// Observed index set. Entries are kept sorted row-major; duplicates and
// out-of-range pairs are rejected at construction.
class IndexMask {
 public:
  IndexMask(Eigen::Index rows, Eigen::Index cols,
            std::vector<std::pair<Eigen::Index, Eigen::Index>> entries);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Zeroes every entry not in the set.
  Mat restrict(const Mat& a) const;

 private:
  Eigen::Index rows_;
  Eigen::Index cols_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> entries_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> keep_;
};

// Reads `row,col` zero-based pairs, one per line.
IndexMask read_mask(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols);
IndexMask parse_mask(std::istream& in, Eigen::Index rows, Eigen::Index cols);

// Linear map from the product space to R^{m x n}. Every operator has the
// form M o [I I] for a matrix-space map M with operator norm <= 1, so the
// gradient of rho(A(x) - Y) is Lipschitz with constant at most 2.
class LinearOp {
 public:
  enum class Kind { sum, restriction, composed };

  static LinearOp sum(Eigen::Index rows, Eigen::Index cols);
  static LinearOp restriction(IndexMask mask);
  // Applies `inner`, then the matrix-space action of `outer`.
  static LinearOp composed(const LinearOp& outer, const LinearOp& inner);

  Kind kind() const;
  Eigen::Index rows() const;
  Eigen::Index cols() const;

  Mat apply(const ProductPoint& x) const;
  ProductPoint adjoint(const Mat& r) const;

  // The matrix-space factor M and its adjoint.
  Mat forward(const Mat& a) const;
  Mat backward(const Mat& r) const;

  double lipschitz_bound() const { return 2.0; }

 private:
  struct Node;
  explicit LinearOp(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

class Penalty {
 public:
  enum class Kind { least_squares, huber };

  static Penalty least_squares() { return Penalty(Kind::least_squares, 0.0); }
  static Penalty huber(double delta = 1.0);

  Kind kind() const { return kind_; }
  double delta() const { return delta_; }

  double value(const Mat& r) const;
  Mat gradient(const Mat& r) const;
  std::pair<double, Mat> value_grad(const Mat& r) const;

  // Penalty of a residual whose whole Frobenius mass `radius` sits in one
  // entry; equals radius^2 / 2 for least squares.
  double level_at_radius(double radius) const;

 private:
  Penalty(Kind kind, double delta) : kind_(kind), delta_(delta) {}
  Kind kind_;
  double delta_;
};

}  // namespace spcp
