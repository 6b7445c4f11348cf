#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "jade/diffops.hpp"
#include "jade/error.hpp"

namespace jade {

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const char* who) {
  if (!v.allFinite()) throw DataError(std::string(who) + ": non-finite input");
}

}  // namespace detail

/// Exact 1D fused lasso (total-variation denoising) by dynamic programming.
///
/// Minimizes 1/2 ||b - y||^2 + lambda * sum_j |b_{j+1} - b_j| in O(n) time
/// by tracking the piecewise-linear derivative of the message function
/// through its knots. Holds its own workspace so repeated calls inside a
/// solver loop do not allocate once warmed up.
template <typename Scalar>
class FusedLassoDP {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  void solve(const Scalar* y, Index n, Scalar lambda, Scalar* out) {
    if (n <= 0) return;
    if (n == 1 || lambda == Scalar(0)) {
      if (out != y) std::copy(y, y + n, out);
      return;
    }
    x_.resize(2 * n);
    a_.resize(2 * n);
    b_.resize(2 * n);
    tm_.resize(n - 1);
    tp_.resize(n - 1);
    // y is only read in the forward pass, so out may alias it.
    Index l = n - 1;
    Index r = n;
    tm_[0] = -lambda + y[0];
    tp_[0] = lambda + y[0];
    x_[l] = tm_[0];
    x_[r] = tp_[0];
    a_[l] = 1;
    b_[l] = -y[0] + lambda;
    a_[r] = -1;
    b_[r] = y[0] + lambda;
    Scalar afirst = 1, bfirst = -y[1] - lambda;
    Scalar alast = -1, blast = y[1] - lambda;

    for (Index k = 1; k < n - 1; ++k) {
      Scalar alo = afirst, blo = bfirst;
      Index lo = l;
      for (; lo <= r; ++lo) {
        if (alo * x_[lo] + blo > -lambda) break;
        alo += a_[lo];
        blo += b_[lo];
      }
      Scalar ahi = alast, bhi = blast;
      Index hi = r;
      for (; hi >= lo; --hi) {
        if (-ahi * x_[hi] - bhi < lambda) break;
        ahi += a_[hi];
        bhi += b_[hi];
      }
      tm_[k] = (-lambda - blo) / alo;
      l = lo - 1;
      x_[l] = tm_[k];
      tp_[k] = (lambda + bhi) / (-ahi);
      r = hi + 1;
      x_[r] = tp_[k];
      a_[l] = alo;
      b_[l] = blo + lambda;
      a_[r] = ahi;
      b_[r] = bhi + lambda;
      afirst = 1;
      bfirst = -y[k + 1] - lambda;
      alast = -1;
      blast = y[k + 1] - lambda;
    }

    Scalar alo = afirst, blo = bfirst;
    for (Index lo = l; lo <= r; ++lo) {
      if (alo * x_[lo] + blo > 0) break;
      alo += a_[lo];
      blo += b_[lo];
    }
    out[n - 1] = -blo / alo;
    for (Index k = n - 2; k >= 0; --k) {
      if (out[k + 1] > tp_[k]) {
        out[k] = tp_[k];
      } else if (out[k + 1] < tm_[k]) {
        out[k] = tm_[k];
      } else {
        out[k] = out[k + 1];
      }
    }
  }

  template <typename Derived>
  Vector operator()(const Eigen::MatrixBase<Derived>& y, Scalar lambda) {
    Vector in = y;
    Vector out(in.size());
    solve(in.data(), in.size(), lambda, out.data());
    return out;
  }

 private:
  std::vector<Scalar> x_, a_, b_, tm_, tp_;
};

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> fused_lasso_1d(
    const Eigen::MatrixBase<Derived>& targets, typename Derived::Scalar penalty) {
  using Scalar = typename Derived::Scalar;
  if (!(penalty >= Scalar(0))) throw ParameterError("fused_lasso_1d: penalty must be nonnegative");
  if (targets.size() < 1) throw DimensionError("fused_lasso_1d: empty input");
  detail::require_finite(targets, "fused_lasso_1d");
  FusedLassoDP<Scalar> dp;
  return dp(targets, penalty);
}

/// Closed-form minimizer of 1/2 (b1-c1)^2 + 1/2 (b2-c2)^2 + w |b1 - b2|.
template <typename Scalar>
std::pair<Scalar, Scalar> fusion_prox_pair(Scalar c1, Scalar c2, Scalar w) {
  if (!(w >= Scalar(0))) throw ParameterError("fusion_prox_pair: weight must be nonnegative");
  if (std::isnan(c1) || std::isnan(c2)) throw DataError("fusion_prox_pair: NaN input");
  const Scalar mid = (c1 + c2) / 2;
  const Scalar d = c1 - c2;
  const Scalar shrunk = std::max(std::abs(d) - 2 * w, Scalar(0));
  const Scalar half = (d < 0 ? -shrunk : shrunk) / 2;
  return {mid + half, mid - half};
}

/// Per-site convex-clustering proximal operator:
///   argmin_b sum_m 1/2 (b_m - c_m)^2 + w sum_{m<m'} |b_m - b_m'|.
///
/// The minimizer preserves the order of c, so on the sorted coordinates the
/// pairwise penalty is linear and the problem becomes an isotonic regression
/// of c_(i) - w (2i - M + 1), solved exactly by pooling adjacent violators.
template <typename Scalar>
class FusionProx {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  // In-place on c (length M).
  template <typename Derived>
  void apply(Eigen::MatrixBase<Derived>& c, Scalar w) {
    const Index m = c.size();
    if (m == 1) return;
    if (m == 2) {
      auto [b1, b2] = fusion_prox_pair_unchecked(c[0], c[1], w);
      c[0] = b1;
      c[1] = b2;
      return;
    }
    order_.resize(m);
    std::iota(order_.begin(), order_.end(), Index{0});
    std::stable_sort(order_.begin(), order_.end(), [&](Index a, Index b) { return c[a] < c[b]; });

    sum_.clear();
    count_.clear();
    for (Index i = 0; i < m; ++i) {
      Scalar z = c[order_[i]] - w * Scalar(2 * i - m + 1);
      Index n = 1;
      while (!sum_.empty() && sum_.back() / Scalar(count_.back()) >= z / Scalar(n)) {
        z += sum_.back();
        n += count_.back();
        sum_.pop_back();
        count_.pop_back();
      }
      sum_.push_back(z);
      count_.push_back(n);
    }
    Index i = 0;
    for (std::size_t blk = 0; blk < sum_.size(); ++blk) {
      const Scalar v = sum_[blk] / Scalar(count_[blk]);
      for (Index t = 0; t < count_[blk]; ++t) c[order_[i++]] = v;
    }
  }

 private:
  static std::pair<Scalar, Scalar> fusion_prox_pair_unchecked(Scalar c1, Scalar c2, Scalar w) {
    const Scalar mid = (c1 + c2) / 2;
    const Scalar d = c1 - c2;
    const Scalar shrunk = std::max(std::abs(d) - 2 * w, Scalar(0));
    const Scalar half = (d < 0 ? -shrunk : shrunk) / 2;
    return {mid + half, mid - half};
  }

  std::vector<Index> order_;
  std::vector<Scalar> sum_;
  std::vector<Index> count_;
};

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> fusion_prox_multi(
    const Eigen::MatrixBase<Derived>& c, typename Derived::Scalar w) {
  using Scalar = typename Derived::Scalar;
  if (c.size() < 2) throw ParameterError("fusion_prox_multi: need at least two groups");
  if (!(w >= Scalar(0))) throw ParameterError("fusion_prox_multi: weight must be nonnegative");
  detail::require_finite(c, "fusion_prox_multi");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = c;
  FusionProx<Scalar> prox;
  prox.apply(out, w);
  return out;
}

}  // namespace jade
