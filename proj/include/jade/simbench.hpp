#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "jade/admm.hpp"
#include "jade/roc.hpp"

namespace jade {

/// Two mean profiles on sites 0..p-1 that differ exactly on `truth`.
struct MeanCurvePair {
  Eigen::VectorXd f1;
  Eigen::VectorXd f2;
  std::vector<bool> truth;

  /// Jointly mapped onto [0, 1] (same affine map for both curves).
  MeanCurvePair rescaled() const;
};

/// Sum-of-Gaussian-bumps baseline shared by both groups; group 2 adds a
/// compactly supported sin^2 bump on two windows (sites 55..110 and 190..230
/// out of 300, scaled with p) with peak separations 1.0 and 0.6.
MeanCurvePair gen_mean_curves(Index p);

enum class Regime { AutoRegressive, RandomEffects, Binomial };

const char* to_string(Regime r);

struct SimConfig {
  Regime regime = Regime::AutoRegressive;
  double sigma = 1.0;
  double ar_rho = 0.0;
  double sigma_re = 0.0;
  double read_mean = 9.0;  // reads = 1 + Poisson(read_mean)
  int n_per_group = 10;
  Index p = 300;
  double spacing = 1.0;
  std::uint64_t seed = 1;

  /// Random-effects regime with sigma^2 + sigma_re^2 = 5 and the given
  /// fraction of variance due to the random effect.
  static SimConfig random_effects(double fraction);
};

/// Per-group observation matrices (n x p).
struct Observations {
  std::vector<Eigen::MatrixXd> groups;
};

struct BinomialObservations {
  std::vector<Eigen::MatrixXi> counts;
  std::vector<Eigen::MatrixXi> reads;
};

Observations simulate_ar(const SimConfig& config, const MeanCurvePair& curves, std::mt19937_64& rng);
Observations simulate_re(const SimConfig& config, const MeanCurvePair& curves, std::mt19937_64& rng);
BinomialObservations simulate_binomial(const SimConfig& config, const MeanCurvePair& curves, std::mt19937_64& rng);

/// Variance estimate with pseudo-counts: y* = (c + 0.5) / (n + 1),
/// var = y* (1 - y*) / n, weight = 1 / sd. Zero reads give weight 0.
struct BinomialWeight {
  double y_star = 0.0;
  double variance = 0.0;
  double weight = 0.0;
};

BinomialWeight binomial_weight(long long counts, long long reads);

/// Group means with A = I and N_m = number of observations.
GroupedDataset normal_dataset(const Observations& obs, const SiteGrid& grid);

/// Per-observation proportions c / n (0 where n = 0).
Observations proportions(const BinomialObservations& obs);

/// Per-observation proportions weighted by 1 / var_imj: the group mean is the
/// inverse-variance weighted proportion and N_m a_mj^2 = sum_i 1 / var_imj, so
/// the grouped quadratic term equals the per-observation one up to a constant.
GroupedDataset binomial_dataset(const BinomialObservations& obs, const SiteGrid& grid);

/// Per-site Welch two-sample |t|. Zero variance with a nonzero mean
/// difference scores +inf; zero variance and equal means scores 0.
Eigen::VectorXd welch_t_scores(const Eigen::MatrixXd& group1, const Eigen::MatrixXd& group2);

/// Two-sided Welch p-values matching welch_t_scores.
std::vector<double> welch_p_values(const Eigen::MatrixXd& group1, const Eigen::MatrixXd& group2);

/// Smooths every observation with a k = 2 trend filter whose lambda minimizes
/// generalized cross-validation over a log grid.
Observations smooth_observations(const Observations& obs, const SiteGrid& grid, int lambda_count = 15,
                                 const SolverOptions& options = {});

enum class Smoothing { None, TrendFilter };

/// Scores of the t-test baselines; requires exactly two groups with at least
/// two observations each.
Eigen::VectorXd t_test_scores(const Observations& obs, const SiteGrid& grid, Smoothing smoothing);

}  // namespace jade
