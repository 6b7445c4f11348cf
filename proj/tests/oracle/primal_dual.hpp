#pragma once

// Slow reference solver for the full JADE objective
//   sum_m 1/2 sum_j q_mj (y_mj - t_mj)^2 + lambda sum_m ||D t_m||_1
//     + gamma sum_{m<m'} ||t_m - t_m'||_1
// by long-run primal-dual proximal splitting (Condat-Vu): a gradient step on
// the smooth loss, and a projection of the dual onto the l1 subgradient box
// [-bound, bound] for every row of the stacked penalty operator. It uses only
// dense/sparse Eigen products: no banded solves, no fused-lasso DP, no
// fusion prox.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dense_ops.hpp"

namespace oracle {

struct JadeProblem {
  Eigen::VectorXd positions;
  Eigen::MatrixXd means;  // M x p
  Eigen::MatrixXd qw;     // M x p quadratic weights
  double lambda = 0.0;
  double gamma = 0.0;
  int k = 0;
};

inline double jade_objective(const JadeProblem& pr, const Eigen::MatrixXd& theta) {
  const Eigen::MatrixXd d = dense_trend_operator(pr.positions, pr.k);
  double f = 0.0;
  for (Eigen::Index m = 0; m < theta.rows(); ++m) {
    for (Eigen::Index j = 0; j < theta.cols(); ++j) {
      if (pr.qw(m, j) > 0.0) f += 0.5 * pr.qw(m, j) * std::pow(pr.means(m, j) - theta(m, j), 2);
    }
    f += pr.lambda * (d * theta.row(m).transpose()).lpNorm<1>();
  }
  for (Eigen::Index a = 0; a < theta.rows(); ++a)
    for (Eigen::Index b = a + 1; b < theta.rows(); ++b) f += pr.gamma * (theta.row(a) - theta.row(b)).lpNorm<1>();
  return f;
}

struct OracleResult {
  Eigen::MatrixXd theta;
  double objective = std::numeric_limits<double>::infinity();
};

inline OracleResult primal_dual_solve(const JadeProblem& pr, int iterations = 400000) {
  const Eigen::Index groups = pr.means.rows();
  const Eigen::Index p = pr.means.cols();
  const Eigen::Index n = groups * p;
  const Eigen::MatrixXd d = dense_trend_operator(pr.positions, pr.k);

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> bound;
  Eigen::Index row = 0;
  for (Eigen::Index m = 0; m < groups; ++m) {
    for (Eigen::Index i = 0; i < d.rows(); ++i, ++row) {
      for (Eigen::Index j = 0; j < p; ++j)
        if (d(i, j) != 0.0) trip.emplace_back(row, m * p + j, d(i, j));
      bound.push_back(pr.lambda);
    }
  }
  for (Eigen::Index a = 0; a < groups; ++a) {
    for (Eigen::Index b = a + 1; b < groups; ++b) {
      for (Eigen::Index j = 0; j < p; ++j, ++row) {
        trip.emplace_back(row, a * p + j, 1.0);
        trip.emplace_back(row, b * p + j, -1.0);
        bound.push_back(pr.gamma);
      }
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> kmat(row, n);
  kmat.setFromTriplets(trip.begin(), trip.end());
  const Eigen::SparseMatrix<double, Eigen::RowMajor> kt = kmat.transpose();
  const Eigen::Map<const Eigen::VectorXd> box(bound.data(), row);

  Eigen::VectorXd q(n), y(n);
  for (Eigen::Index m = 0; m < groups; ++m) {
    for (Eigen::Index j = 0; j < p; ++j) {
      q[m * p + j] = pr.qw(m, j);
      y[m * p + j] = pr.qw(m, j) > 0.0 ? pr.means(m, j) : 0.0;
    }
  }

  // ||K||^2 by power iteration.
  // Alternating-sign start: constants lie in the null space of every row.
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * static_cast<double>(i % 3) - (i % 2 ? 2.0 : 0.0);
  double knorm2 = 1.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = kt * (kmat * v);
    knorm2 = w.norm() / v.norm();
    v = w / w.norm();
  }
  const double lip = std::max(q.maxCoeff(), 1e-12);
  const double sigma = std::sqrt(lip) / std::sqrt(knorm2);
  const double tau = 0.99 / (lip / 2.0 + sigma * knorm2);

  Eigen::VectorXd x = y;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(row);
  OracleResult best;
  auto to_matrix = [&](const Eigen::VectorXd& flat) {
    Eigen::MatrixXd t(groups, p);
    for (Eigen::Index m = 0; m < groups; ++m) t.row(m) = flat.segment(m * p, p).transpose();
    return t;
  };
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = q.cwiseProduct(x - y);
    const Eigen::VectorXd xn = x - tau * (grad + kt * z);
    z = (z + sigma * (kmat * (2.0 * xn - x))).cwiseMax(-box).cwiseMin(box);
    x = xn;
    if (it % 50 == 0 || it + 1 == iterations) {
      const Eigen::MatrixXd t = to_matrix(x);
      const double f = jade_objective(pr, t);
      if (f < best.objective) {
        best.objective = f;
        best.theta = t;
      }
    }
  }
  return best;
}

}  // namespace oracle
