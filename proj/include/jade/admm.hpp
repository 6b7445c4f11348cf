#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "jade/banded_cholesky.hpp"
#include "jade/diffops.hpp"
#include "jade/prox.hpp"

namespace jade {

/// Per-group summaries on a shared grid. Row m of each matrix is group m.
struct GroupedDataset {
  SiteGrid grid;
  Eigen::MatrixXd means;    // ybar_m
  Eigen::MatrixXd weights;  // diagonal of A_m (inverse-sd scale); 0 = missing
  Eigen::VectorXd sizes;    // N_m

  Index groups() const { return means.rows(); }
  Index sites() const { return means.cols(); }

  /// N_m * a_mj^2, the coefficient of each squared residual.
  Eigen::MatrixXd quadratic_weights() const;

  /// Throws on inconsistent shapes, negative weights, N_m < 1 or non-finite
  /// observed values. Missing means (zero weight) may be NaN and are zeroed.
  void validate() const;

  /// Equal-weight dataset (A_m = I, N_m = 1).
  static GroupedDataset unweighted(SiteGrid grid, Eigen::MatrixXd means);
};

struct PenaltyParams {
  double lambda = 0.0;
  double gamma = 0.0;
  int k = 2;
  double epsilon = 0.005;
};

struct Tolerance {
  double abs = 1e-6;
  double rel = 1e-5;
};

/// Residual-balancing step-size adaptation.
struct StepSizeRule {
  double factor = 2.0;
  double trigger_ratio = 10.0;
  int spacing = 5;
  double min_rho = 1e-6;
  double max_rho = 1e8;
  // Adaptation stops after this many iterations so the tail runs with fixed
  // step sizes.
  int adapt_until = 5000;
  // Compare residuals after dividing each by its convergence threshold rather
  // than as raw norms.
  bool normalized = true;
};

struct SolverOptions {
  Tolerance tol;
  int max_iterations = 20000;
  StepSizeRule step;
};

struct BlockResidual {
  double primal = 0.0;
  double dual = 0.0;
  double primal_scale = 0.0;
  double dual_scale = 0.0;
  Index primal_dim = 0;
  Index dual_dim = 0;
};

/// Primal, dual and step-size variables of the scaled augmented Lagrangian.
struct AdmmState {
  Eigen::MatrixXd theta;    // M x p
  Eigen::MatrixXd alpha;    // M x (p - k)
  Eigen::MatrixXd beta;     // M x p
  Eigen::MatrixXd u_alpha;  // M x (p - k)
  Eigen::MatrixXd u_beta;   // M x p
  Eigen::VectorXd rho_alpha;
  double rho_beta = 1.0;
  int iteration = 0;
  std::vector<BlockResidual> alpha_residuals;  // one per group
  BlockResidual beta_residual;
};

struct JadeFit {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd beta;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  PenaltyParams params;
  AdmmState state;
  std::string error;  // set when the solve failed (path points keep going)
};

/// Objective value of the JADE problem at theta, evaluated directly from its
/// definition with a freshly built derivative operator.
double jade_objective(const GroupedDataset& data, const PenaltyParams& params, const Eigen::MatrixXd& theta);

/// ADMM solver bound to one dataset and trend order. Caches the difference
/// operators and per-group banded factorizations (refactored only when a step
/// size changes). Not thread-safe; use one instance per thread.
class JadeSolver {
 public:
  JadeSolver(GroupedDataset data, int k, SolverOptions options = {});

  const GroupedDataset& data() const { return data_; }
  const DiffOperator& scaled_difference() const { return dk_; }
  const SolverOptions& options() const { return options_; }

  /// Algorithm start: beta_m from separate per-group trend filters (gamma = 0),
  /// alpha_m = D~ beta_m, zero duals. `init_beta` replaces the per-group fits.
  AdmmState initial_state(double lambda, const std::optional<Eigen::MatrixXd>& init_beta = std::nullopt);

  /// One theta, alpha, beta and dual update plus residuals; does not adapt step sizes.
  void iterate(AdmmState& state, const PenaltyParams& params);

  /// Runs to convergence or the iteration cap starting from `state`.
  JadeFit run(const PenaltyParams& params, AdmmState state);

  JadeFit solve(const PenaltyParams& params, const std::optional<Eigen::MatrixXd>& init_beta = std::nullopt) {
    return run(params, initial_state(params.lambda, init_beta));
  }

  /// Step (a) for every group.
  void theta_update(AdmmState& state);

 private:
  void refactor_if_needed(const AdmmState& state, Index m);

  GroupedDataset data_;
  int k_;
  SolverOptions options_;
  DiffOperator dk_;
  DiffOperator::Band gram_;
  Eigen::MatrixXd qw_;  // quadratic weights
  std::vector<BandedCholesky<double>> factors_;
  std::vector<double> factor_rho_alpha_;
  std::vector<double> factor_rho_beta_;
  FusedLassoDP<double> fused_lasso_;
  FusionProx<double> fusion_;
};

/// Step (a) as a standalone operation on a state.
void theta_update(AdmmState& state, const GroupedDataset& data, const PenaltyParams& params);

/// Residual balancing with dual rescaling u <- u * rho_old / rho_new.
/// Acts only on iterations that are multiples of `rule.spacing`. With
/// `rule.normalized`, each residual is measured against its threshold under
/// `tol` so both reach convergence together.
void update_step_sizes(AdmmState& state, const StepSizeRule& rule, const Tolerance& tol = {});

/// Absolute + relative residual test over every block.
bool check_convergence(const AdmmState& state, const Tolerance& tol);

JadeFit solve_jade(const GroupedDataset& data, const PenaltyParams& params, const SolverOptions& options = {},
                   const std::optional<Eigen::MatrixXd>& init_beta = std::nullopt);

/// Weighted l1 trend filter:
///   argmin_t 1/2 sum_j a_j (y_j - t_j)^2 + lambda ||D^{k+1} t||_1,
/// with quadratic weights a_j >= 0 (zero marks a missing site). Solved as a
/// single-group JADE problem. Throws UnderdeterminedError with fewer than
/// k + 2 positively weighted sites.
Eigen::VectorXd trend_filter(const SiteGrid& grid, const Eigen::VectorXd& targets, const Eigen::VectorXd& weights,
                             double lambda, int k, const SolverOptions& options = {});

/// Largest pairwise separation max_j (max_m b_mj - min_m b_mj).
double max_separation(const Eigen::MatrixXd& profiles);

struct GammaGrid {
  std::vector<double> values;  // strictly decreasing
  double gamma_max = 0.0;
  bool capped = false;
  std::vector<std::string> warnings;
};

/// Log-spaced grid from gamma_max down to gamma_max / 1e3. gamma_max is the
/// first value of a doubling search whose fit has every beta column exactly
/// fused (separation <= fusion_tol).
GammaGrid gamma_grid(const GroupedDataset& data, double lambda, int k, int count = 100,
                     const SolverOptions& options = {}, double fusion_tol = 1e-9);

/// Fits along `gammas` in the given order, each warm-started from the previous
/// one (beta, alpha, duals and step sizes carried forward).
std::vector<JadeFit> solve_gamma_path(const GroupedDataset& data, double lambda, const std::vector<double>& gammas,
                                      int k, const SolverOptions& options = {}, double epsilon = 0.005);

}  // namespace jade
