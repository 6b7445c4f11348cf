#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "jade/error.hpp"

namespace jade {

using Index = Eigen::Index;

/// Strictly increasing measurement positions s_1 < ... < s_p.
class SiteGrid {
 public:
  SiteGrid() = default;

  explicit SiteGrid(Eigen::VectorXd positions) : positions_(std::move(positions)) {
    for (Index j = 0; j < positions_.size(); ++j) {
      if (!std::isfinite(positions_[j])) throw DataError("SiteGrid: non-finite position");
      if (j > 0 && !(positions_[j] > positions_[j - 1])) {
        throw DataError("SiteGrid: positions must be strictly increasing (index " +
                        std::to_string(j) + ")");
      }
    }
  }

  /// 0, spacing, 2*spacing, ...
  static SiteGrid even(Index p, double spacing = 1.0) {
    return SiteGrid(Eigen::VectorXd::LinSpaced(p, 0.0, spacing * static_cast<double>(p - 1)));
  }

  Index size() const { return positions_.size(); }
  double operator[](Index j) const { return positions_[j]; }
  const Eigen::VectorXd& positions() const { return positions_; }

 private:
  Eigen::VectorXd positions_;
};

/// Row-banded operator whose row i is supported on columns [i, i + width).
///
/// Every difference operator used by trend filtering has this staircase
/// shape, so `cols == rows + width - 1` always holds and composition of two
/// such operators stays in the family.
template <typename Scalar>
class BandedOperator {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Band = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  BandedOperator() = default;

  BandedOperator(Index rows, Index width) : band_(Band::Zero(rows, width)) {
    if (rows < 1 || width < 1) throw DimensionError("BandedOperator: empty operator");
  }

  static BandedOperator identity(Index n) {
    BandedOperator op(n, 1);
    op.band_.setOnes();
    return op;
  }

  Index rows() const { return band_.rows(); }
  Index cols() const { return band_.rows() + band_.cols() - 1; }
  Index bandwidth() const { return band_.cols(); }

  /// Coefficient at (row, row + offset).
  Scalar& band(Index row, Index offset) { return band_(row, offset); }
  Scalar band(Index row, Index offset) const { return band_(row, offset); }
  const Band& band_storage() const { return band_; }

  Scalar operator()(Index i, Index j) const {
    const Index d = j - i;
    return (d >= 0 && d < bandwidth()) ? band_(i, d) : Scalar(0);
  }

  template <typename Derived>
  Vector apply(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != cols()) throw DimensionError("BandedOperator::apply: size mismatch");
    Vector out(rows());
    const Index w = bandwidth();
    for (Index i = 0; i < rows(); ++i) {
      Scalar acc(0);
      for (Index d = 0; d < w; ++d) acc += band_(i, d) * x[i + d];
      out[i] = acc;
    }
    return out;
  }

  template <typename Derived>
  Vector apply_transpose(const Eigen::MatrixBase<Derived>& y) const {
    if (y.size() != rows()) throw DimensionError("BandedOperator::apply_transpose: size mismatch");
    Vector out = Vector::Zero(cols());
    const Index w = bandwidth();
    for (Index i = 0; i < rows(); ++i) {
      for (Index d = 0; d < w; ++d) out[i + d] += band_(i, d) * y[i];
    }
    return out;
  }

  /// Left-multiplies by diag(scale).
  template <typename Derived>
  BandedOperator& scale_rows(const Eigen::MatrixBase<Derived>& scale) {
    if (scale.size() != rows()) throw DimensionError("BandedOperator::scale_rows: size mismatch");
    band_.array().colwise() *= scale.derived().array();
    return *this;
  }

  Dense dense() const {
    Dense out = Dense::Zero(rows(), cols());
    for (Index i = 0; i < rows(); ++i)
      for (Index d = 0; d < bandwidth(); ++d) out(i, i + d) = band_(i, d);
    return out;
  }

  /// Lower band of the Gram matrix (this^T this); entry (j, d) holds G(j, j - d).
  Band gram_lower() const {
    const Index w = bandwidth();
    Band g = Band::Zero(cols(), w);
    for (Index i = 0; i < rows(); ++i) {
      for (Index a = 0; a < w; ++a) {
        for (Index b = 0; b <= a; ++b) g(i + a, a - b) += band_(i, a) * band_(i, b);
      }
    }
    return g;
  }

  /// Lower band of this * this^T; entry (i, d) holds G(i, i - d).
  Band outer_gram_lower() const {
    const Index w = bandwidth();
    Band g = Band::Zero(rows(), w);
    for (Index i = 0; i < rows(); ++i) {
      for (Index d = 0; d < w && d <= i; ++d) {
        // Rows i and i - d overlap on columns [i, i - d + w).
        Scalar acc(0);
        for (Index c = i; c < i - d + w; ++c) acc += band_(i, c - i) * band_(i - d, c - i + d);
        g(i, d) = acc;
      }
    }
    return g;
  }

  friend BandedOperator operator*(const BandedOperator& lhs, const BandedOperator& rhs) {
    if (lhs.cols() != rhs.rows()) throw DimensionError("BandedOperator product: inner dimension mismatch");
    BandedOperator out(lhs.rows(), lhs.bandwidth() + rhs.bandwidth() - 1);
    for (Index i = 0; i < lhs.rows(); ++i) {
      for (Index a = 0; a < lhs.bandwidth(); ++a) {
        const Scalar l = lhs.band_(i, a);
        if (l == Scalar(0)) continue;
        for (Index b = 0; b < rhs.bandwidth(); ++b) out.band_(i, a + b) += l * rhs.band_(i + a, b);
      }
    }
    return out;
  }

 private:
  Band band_;
};

using DiffOperator = BandedOperator<double>;

/// rows x (rows + 1) first-difference operator.
template <typename Scalar = double>
BandedOperator<Scalar> build_first_difference(Index rows) {
  if (rows < 1) throw DimensionError("build_first_difference: rows must be >= 1");
  BandedOperator<Scalar> op(rows, 2);
  for (Index i = 0; i < rows; ++i) {
    op.band(i, 0) = Scalar(-1);
    op.band(i, 1) = Scalar(1);
  }
  return op;
}

/// (p - k) x p operator equal to k! times the k-th divided differences on the grid.
template <typename Scalar = double>
BandedOperator<Scalar> build_scaled_kth_difference(const SiteGrid& grid, int k) {
  if (k < 0) throw ParameterError("build_scaled_kth_difference: order must be >= 0");
  const Index p = grid.size();
  if (p < k + 1) {
    throw DimensionError("build_scaled_kth_difference: need p >= k + 1 (p=" + std::to_string(p) +
                         ", k=" + std::to_string(k) + ")");
  }
  auto op = BandedOperator<Scalar>::identity(p);
  for (int order = 1; order <= k; ++order) {
    const Index rows = p - order;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scale(rows);
    for (Index j = 0; j < rows; ++j) {
      scale[j] = Scalar(order) / Scalar(grid[j + order] - grid[j]);
    }
    op = build_first_difference<Scalar>(rows) * op;
    op.scale_rows(scale);
  }
  return op;
}

/// (p - k - 1) x p discrete (k+1)-th derivative operator D^1 * D~^k.
template <typename Scalar = double>
BandedOperator<Scalar> build_trend_operator(const SiteGrid& grid, int k) {
  if (k < 0) throw ParameterError("build_trend_operator: order must be >= 0");
  if (grid.size() < k + 2) {
    throw DimensionError("build_trend_operator: need p >= k + 2 (p=" + std::to_string(grid.size()) +
                         ", k=" + std::to_string(k) + ")");
  }
  return build_first_difference<Scalar>(grid.size() - k - 1) * build_scaled_kth_difference<Scalar>(grid, k);
}

}  // namespace jade
