#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "../oracle/primal_dual.hpp"
#include "jade/admm.hpp"

namespace testutil {

inline jade::GroupedDataset to_dataset(const oracle::JadeProblem& pr) {
  jade::GroupedDataset d;
  d.grid = jade::SiteGrid(pr.positions);
  d.means = pr.means;
  d.weights = pr.qw.cwiseSqrt();
  d.sizes = Eigen::VectorXd::Ones(pr.means.rows());
  return d;
}

inline jade::PenaltyParams params_of(const oracle::JadeProblem& pr) {
  jade::PenaltyParams params;
  params.lambda = pr.lambda;
  params.gamma = pr.gamma;
  params.k = pr.k;
  return params;
}

inline jade::SolverOptions tight() {
  jade::SolverOptions o;
  o.tol.abs = 1e-9;
  o.tol.rel = 1e-8;
  o.max_iterations = 200000;
  return o;
}

/// Smooth groups on an irregular grid with a bump added to group 1.
inline jade::GroupedDataset bumpy(std::uint64_t seed, int groups, int p, double noise = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Eigen::VectorXd s(p);
  double x = 0.0;
  for (int j = 0; j < p; ++j) s[j] = (x += u(rng));
  jade::GroupedDataset d;
  d.grid = jade::SiteGrid(s);
  d.means.resize(groups, p);
  d.weights.resize(groups, p);
  d.sizes = Eigen::VectorXd::Constant(groups, 3.0);
  for (int m = 0; m < groups; ++m) {
    for (int j = 0; j < p; ++j) {
      const double bump = (m == 1 && j > p / 3 && j < 2 * p / 3) ? 0.8 : 0.0;
      d.means(m, j) = std::sin(s[j] / 4.0) + bump + noise * z(rng);
      d.weights(m, j) = u(rng);
    }
  }
  return d;
}

}  // namespace testutil
