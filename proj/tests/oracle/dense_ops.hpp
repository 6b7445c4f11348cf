#pragma once

// Dense reference constructions, independent of the banded code paths.

#include <Eigen/Dense>

#include <cmath>

namespace oracle {

inline Eigen::MatrixXd dense_first_difference(Eigen::Index rows) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, rows + 1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    d(i, i) = -1.0;
    d(i, i + 1) = 1.0;
  }
  return d;
}

inline Eigen::MatrixXd dense_scaled_difference(const Eigen::VectorXd& s, int k) {
  const Eigen::Index p = s.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(p, p);
  for (int order = 1; order <= k; ++order) {
    const Eigen::Index rows = p - order;
    Eigen::VectorXd scale(rows);
    for (Eigen::Index j = 0; j < rows; ++j) scale[j] = order / (s[j + order] - s[j]);
    d = scale.asDiagonal() * dense_first_difference(rows) * d;
  }
  return d;
}

inline Eigen::MatrixXd dense_trend_operator(const Eigen::VectorXd& s, int k) {
  return dense_first_difference(s.size() - k - 1) * dense_scaled_difference(s, k);
}

}  // namespace oracle
