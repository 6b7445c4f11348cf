#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "jade/error.hpp"

namespace jade {

/// Cholesky factorization of a symmetric positive-definite band matrix.
///
/// The input is given in lower band storage: `lower(j, d)` holds A(j, j - d)
/// for d = 0..h, where h is the half-bandwidth. Entries with j - d < 0 are
/// ignored. Factorization and solves cost O(n h^2) and O(n h).
template <typename Scalar>
class BandedCholesky {
 public:
  using Index = Eigen::Index;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Band = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  BandedCholesky() = default;
  explicit BandedCholesky(const Band& lower) { compute(lower); }

  BandedCholesky& compute(const Band& lower) {
    factor_ = lower;
    const Index n = factor_.rows();
    const Index h = factor_.cols() - 1;
    for (Index j = 0; j < n; ++j) {
      Scalar diag = factor_(j, 0);
      for (Index m = std::max<Index>(0, j - h); m < j; ++m) diag -= factor_(j, j - m) * factor_(j, j - m);
      if (!(diag > Scalar(0)) || !std::isfinite(static_cast<double>(diag))) {
        throw NumericalError("BandedCholesky: matrix not positive definite at row " + std::to_string(j) +
                             " (pivot " + std::to_string(static_cast<double>(diag)) + ", n=" +
                             std::to_string(n) + ", half-bandwidth=" + std::to_string(h) + ")");
      }
      const Scalar ljj = std::sqrt(diag);
      factor_(j, 0) = ljj;
      for (Index i = j + 1; i <= std::min(n - 1, j + h); ++i) {
        Scalar v = factor_(i, i - j);
        for (Index m = std::max<Index>(0, i - h); m < j; ++m) v -= factor_(i, i - m) * factor_(j, j - m);
        factor_(i, i - j) = v / ljj;
      }
    }
    return *this;
  }

  Index size() const { return factor_.rows(); }

  template <typename Derived>
  Vector solve(const Eigen::MatrixBase<Derived>& rhs) const {
    Vector x = rhs;
    solve_in_place(x);
    return x;
  }

  void solve_in_place(Vector& x) const {
    const Index n = factor_.rows();
    const Index h = factor_.cols() - 1;
    if (x.size() != n) throw DimensionError("BandedCholesky::solve: size mismatch");
    for (Index i = 0; i < n; ++i) {
      Scalar v = x[i];
      for (Index m = std::max<Index>(0, i - h); m < i; ++m) v -= factor_(i, i - m) * x[m];
      x[i] = v / factor_(i, 0);
    }
    for (Index i = n - 1; i >= 0; --i) {
      Scalar v = x[i];
      for (Index r = i + 1; r <= std::min(n - 1, i + h); ++r) v -= factor_(r, r - i) * x[r];
      x[i] = v / factor_(i, 0);
    }
  }

 private:
  Band factor_;
};

}  // namespace jade
