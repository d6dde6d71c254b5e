#include "spcp/operators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>

#include "spcp/error.hpp"

namespace spcp {

ProductPoint::ProductPoint(Mat l, Mat s) : L(std::move(l)), S(std::move(s)) {
  if (L.rows() != S.rows() || L.cols() != S.cols())
    throw InvalidArgument("ProductPoint: L and S dimensions differ");
}

ProductPoint ProductPoint::zeros(Eigen::Index rows, Eigen::Index cols) {
  return ProductPoint(Mat::Zero(rows, cols), Mat::Zero(rows, cols));
}

double ProductPoint::norm() const { return std::sqrt(squared_norm()); }

ProductPoint& ProductPoint::operator+=(const ProductPoint& o) {
  L += o.L;
  S += o.S;
  return *this;
}

ProductPoint& ProductPoint::operator-=(const ProductPoint& o) {
  L -= o.L;
  S -= o.S;
  return *this;
}

ProductPoint& ProductPoint::operator*=(double c) {
  L *= c;
  S *= c;
  return *this;
}

ProductPoint operator+(ProductPoint a, const ProductPoint& b) { return a += b; }
ProductPoint operator-(ProductPoint a, const ProductPoint& b) { return a -= b; }
ProductPoint operator*(double c, ProductPoint a) { return a *= c; }

double dot(const ProductPoint& a, const ProductPoint& b) { return dot(a.L, b.L) + dot(a.S, b.S); }

// ---------------------------------------------------------------------------

IndexMask::IndexMask(Eigen::Index rows, Eigen::Index cols,
                     std::vector<std::pair<Eigen::Index, Eigen::Index>> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)), keep_(rows, cols) {
  if (rows < 0 || cols < 0) throw InvalidArgument("IndexMask: negative dimensions");
  std::sort(entries_.begin(), entries_.end());
  if (std::adjacent_find(entries_.begin(), entries_.end()) != entries_.end())
    throw InvalidArgument("IndexMask: duplicate index");
  keep_.setConstant(false);
  for (const auto& [i, j] : entries_) {
    if (i < 0 || i >= rows || j < 0 || j >= cols)
      throw InvalidArgument("IndexMask: index (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of range");
    keep_(i, j) = true;
  }
}

Mat IndexMask::restrict(const Mat& a) const {
  if (a.rows() != rows_ || a.cols() != cols_) throw InvalidArgument("IndexMask: dimension mismatch");
  return keep_.select(a, Mat::Zero(rows_, cols_));
}

IndexMask parse_mask(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    long long r = 0;
    long long c = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    auto res = std::from_chars(p, end, r);
    bool ok = res.ec == std::errc();
    p = res.ptr;
    while (ok && p < end && (*p == ' ' || *p == '\t')) ++p;
    ok = ok && p < end && *p == ',';
    if (ok) {
      ++p;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      res = std::from_chars(p, end, c);
      ok = res.ec == std::errc();
      p = res.ptr;
      while (ok && p < end && (*p == ' ' || *p == '\t')) ++p;
      ok = ok && p == end;
    }
    if (!ok) throw InvalidArgument("mask: malformed line " + std::to_string(lineno));
    entries.emplace_back(r, c);
  }
  return IndexMask(rows, cols, std::move(entries));
}

IndexMask read_mask(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open mask " + path.string());
  return parse_mask(in, rows, cols);
}

// ---------------------------------------------------------------------------

struct LinearOp::Node {
  Kind kind;
  Eigen::Index rows;
  Eigen::Index cols;
  std::optional<IndexMask> mask;
  std::shared_ptr<const Node> outer;
  std::shared_ptr<const Node> inner;

  Mat forward(const Mat& a) const {
    switch (kind) {
      case Kind::sum:
        return a;
      case Kind::restriction:
        return mask->restrict(a);
      case Kind::composed:
        return outer->forward(inner->forward(a));
    }
    return a;
  }

  Mat backward(const Mat& r) const {
    switch (kind) {
      case Kind::sum:
        return r;
      case Kind::restriction:
        return mask->restrict(r);
      case Kind::composed:
        return inner->backward(outer->backward(r));
    }
    return r;
  }
};

LinearOp LinearOp::sum(Eigen::Index rows, Eigen::Index cols) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::sum;
  node->rows = rows;
  node->cols = cols;
  return LinearOp(std::move(node));
}

LinearOp LinearOp::restriction(IndexMask mask) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::restriction;
  node->rows = mask.rows();
  node->cols = mask.cols();
  node->mask = std::move(mask);
  return LinearOp(std::move(node));
}

LinearOp LinearOp::composed(const LinearOp& outer, const LinearOp& inner) {
  if (outer.rows() != inner.rows() || outer.cols() != inner.cols())
    throw InvalidArgument("LinearOp::composed: dimension mismatch");
  auto node = std::make_shared<Node>();
  node->kind = Kind::composed;
  node->rows = inner.rows();
  node->cols = inner.cols();
  node->outer = outer.node_;
  node->inner = inner.node_;
  return LinearOp(std::move(node));
}

LinearOp::Kind LinearOp::kind() const { return node_->kind; }
Eigen::Index LinearOp::rows() const { return node_->rows; }
Eigen::Index LinearOp::cols() const { return node_->cols; }

Mat LinearOp::forward(const Mat& a) const {
  if (a.rows() != rows() || a.cols() != cols()) throw InvalidArgument("LinearOp: dimension mismatch");
  return node_->forward(a);
}

Mat LinearOp::backward(const Mat& r) const {
  if (r.rows() != rows() || r.cols() != cols()) throw InvalidArgument("LinearOp: dimension mismatch");
  return node_->backward(r);
}

Mat LinearOp::apply(const ProductPoint& x) const {
  if (x.L.rows() != rows() || x.L.cols() != cols() || x.S.rows() != rows() || x.S.cols() != cols())
    throw InvalidArgument("LinearOp::apply: dimension mismatch");
  return node_->forward(x.L + x.S);
}

ProductPoint LinearOp::adjoint(const Mat& r) const {
  Mat back = backward(r);
  return ProductPoint(back, back);
}

// ---------------------------------------------------------------------------

Penalty Penalty::huber(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("huber: delta must be positive");
  return Penalty(Kind::huber, delta);
}

double Penalty::value(const Mat& r) const {
  if (kind_ == Kind::least_squares) return 0.5 * r.squaredNorm();
  const double d = delta_;
  return r.unaryExpr([d](double v) {
            const double a = std::abs(v);
            return a <= d ? 0.5 * v * v : d * (a - 0.5 * d);
          })
      .sum();
}

Mat Penalty::gradient(const Mat& r) const {
  if (kind_ == Kind::least_squares) return r;
  return r.cwiseMax(-delta_).cwiseMin(delta_);
}

std::pair<double, Mat> Penalty::value_grad(const Mat& r) const { return {value(r), gradient(r)}; }

double Penalty::level_at_radius(double radius) const {
  const double a = std::abs(radius);
  if (kind_ == Kind::least_squares || a <= delta_) return 0.5 * a * a;
  return delta_ * (a - 0.5 * delta_);
}

}  // namespace spcp
