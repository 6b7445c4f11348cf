#include "jade/admm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace jade {

Eigen::MatrixXd GroupedDataset::quadratic_weights() const {
  Eigen::MatrixXd q = weights.array().square();
  q.array().colwise() *= sizes.array();
  return q;
}

void GroupedDataset::validate() const {
  const Index m = means.rows();
  const Index p = means.cols();
  if (m < 1) throw DimensionError("GroupedDataset: no groups");
  if (p != grid.size()) {
    throw DimensionError("GroupedDataset: means have " + std::to_string(p) + " sites but grid has " +
                         std::to_string(grid.size()));
  }
  if (weights.rows() != m || weights.cols() != p) throw DimensionError("GroupedDataset: weights shape mismatch");
  if (sizes.size() != m) throw DimensionError("GroupedDataset: sizes length mismatch");
  for (Index g = 0; g < m; ++g) {
    if (!(sizes[g] >= 1.0)) throw DataError("GroupedDataset: group size must be >= 1");
    for (Index j = 0; j < p; ++j) {
      const double w = weights(g, j);
      if (!std::isfinite(w) || w < 0.0) throw DataError("GroupedDataset: weights must be finite and nonnegative");
      if (w > 0.0 && !std::isfinite(means(g, j))) {
        throw DataError("GroupedDataset: non-finite mean at group " + std::to_string(g) + ", site " +
                        std::to_string(j));
      }
    }
  }
}

GroupedDataset GroupedDataset::unweighted(SiteGrid grid, Eigen::MatrixXd means) {
  GroupedDataset d;
  d.weights = Eigen::MatrixXd::Ones(means.rows(), means.cols());
  d.sizes = Eigen::VectorXd::Ones(means.rows());
  d.grid = std::move(grid);
  d.means = std::move(means);
  return d;
}

double jade_objective(const GroupedDataset& data, const PenaltyParams& params, const Eigen::MatrixXd& theta) {
  const Eigen::MatrixXd q = data.quadratic_weights();
  const DiffOperator d = build_trend_operator(data.grid, params.k);
  double loss = 0.0;
  for (Index m = 0; m < theta.rows(); ++m) {
    for (Index j = 0; j < theta.cols(); ++j) {
      if (q(m, j) > 0.0) loss += 0.5 * q(m, j) * (data.means(m, j) - theta(m, j)) * (data.means(m, j) - theta(m, j));
    }
  }
  double smooth = 0.0;
  for (Index m = 0; m < theta.rows(); ++m) smooth += d.apply(theta.row(m).transpose()).lpNorm<1>();
  double fuse = 0.0;
  for (Index a = 0; a < theta.rows(); ++a)
    for (Index b = a + 1; b < theta.rows(); ++b) fuse += (theta.row(a) - theta.row(b)).lpNorm<1>();
  return loss + params.lambda * smooth + params.gamma * fuse;
}

JadeSolver::JadeSolver(GroupedDataset data, int k, SolverOptions options)
    : data_(std::move(data)), k_(k), options_(options) {
  if (k < 0) throw ParameterError("JadeSolver: trend order must be >= 0");
  data_.validate();
  if (data_.sites() < k + 2) {
    throw DimensionError("JadeSolver: need at least k + 2 sites (p=" + std::to_string(data_.sites()) +
                         ", k=" + std::to_string(k) + ")");
  }
  qw_ = data_.quadratic_weights();
  for (Index m = 0; m < data_.groups(); ++m)
    for (Index j = 0; j < data_.sites(); ++j)
      if (qw_(m, j) == 0.0) data_.means(m, j) = 0.0;
  dk_ = build_scaled_kth_difference(data_.grid, k);
  gram_ = dk_.gram_lower();
  factors_.resize(data_.groups());
  factor_rho_alpha_.assign(data_.groups(), -1.0);
  factor_rho_beta_.assign(data_.groups(), -1.0);
}

void JadeSolver::refactor_if_needed(const AdmmState& state, Index m) {
  const double ra = state.rho_alpha[m];
  const double rb = state.rho_beta;
  if (factor_rho_alpha_[m] == ra && factor_rho_beta_[m] == rb) return;
  DiffOperator::Band lower = ra * gram_;
  lower.col(0).array() += qw_.row(m).transpose().array() + rb;
  factors_[m].compute(lower);
  factor_rho_alpha_[m] = ra;
  factor_rho_beta_[m] = rb;
}

AdmmState JadeSolver::initial_state(double lambda, const std::optional<Eigen::MatrixXd>& init_beta) {
  const Index groups = data_.groups();
  const Index p = data_.sites();
  AdmmState s;

  const double gram_scale = gram_.col(0).mean();
  s.rho_alpha.resize(groups);
  double mean_weight = 0.0;
  for (Index m = 0; m < groups; ++m) {
    const Eigen::ArrayXd q = qw_.row(m).transpose().array();
    const Index observed = (q > 0.0).count();
    const double wbar = observed > 0 ? q.sum() / static_cast<double>(observed) : 1.0;
    s.rho_alpha[m] = wbar / gram_scale;
    mean_weight += wbar / static_cast<double>(groups);
  }
  s.rho_beta = mean_weight;

  if (init_beta) {
    if (init_beta->rows() != groups || init_beta->cols() != p) {
      throw DimensionError("initial_state: init_beta shape mismatch");
    }
    s.beta = *init_beta;
  } else if (groups == 1) {
    // Unobserved sites start at the weighted mean of the observed ones.
    const Eigen::ArrayXd q = qw_.row(0).transpose().array();
    const double total = q.sum();
    const double fill = total > 0.0 ? (q * data_.means.row(0).transpose().array()).sum() / total : 0.0;
    s.beta = data_.means;
    for (Index j = 0; j < p; ++j)
      if (q[j] == 0.0) s.beta(0, j) = fill;
  } else {
    s.beta.resize(groups, p);
    for (Index m = 0; m < groups; ++m) {
      GroupedDataset single;
      single.grid = data_.grid;
      single.means = data_.means.row(m);
      single.weights = data_.weights.row(m);
      single.sizes = Eigen::VectorXd::Constant(1, data_.sizes[m]);
      JadeSolver solver(std::move(single), k_, options_);
      const JadeFit fit = solver.solve({lambda, 0.0, k_, 0.0});
      s.beta.row(m) = fit.theta.row(0);
    }
  }
  s.theta = s.beta;
  s.alpha.resize(groups, p - k_);
  for (Index m = 0; m < groups; ++m) s.alpha.row(m) = dk_.apply(s.beta.row(m).transpose()).transpose();
  s.u_alpha = Eigen::MatrixXd::Zero(groups, p - k_);
  s.u_beta = Eigen::MatrixXd::Zero(groups, p);
  s.alpha_residuals.assign(groups, BlockResidual{});
  return s;
}

void JadeSolver::theta_update(AdmmState& s) {
  for (Index m = 0; m < data_.groups(); ++m) {
    refactor_if_needed(s, m);
    Eigen::VectorXd rhs = qw_.row(m).transpose().cwiseProduct(data_.means.row(m).transpose());
    rhs += s.rho_alpha[m] * dk_.apply_transpose((s.alpha.row(m) - s.u_alpha.row(m)).transpose());
    rhs += s.rho_beta * (s.beta.row(m) - s.u_beta.row(m)).transpose();
    factors_[m].solve_in_place(rhs);
    s.theta.row(m) = rhs.transpose();
  }
}

void JadeSolver::iterate(AdmmState& s, const PenaltyParams& params) {
  const Index groups = data_.groups();
  const Index p = data_.sites();
  ++s.iteration;

  theta_update(s);
  if (!s.theta.allFinite()) {
    throw NumericalError("JadeSolver: non-finite profile estimate at iteration " + std::to_string(s.iteration));
  }

  s.alpha_residuals.resize(groups);
  for (Index m = 0; m < groups; ++m) {
    const Eigen::VectorXd dtheta = dk_.apply(s.theta.row(m).transpose());
    const Eigen::VectorXd alpha_old = s.alpha.row(m).transpose();
    Eigen::VectorXd target = dtheta + s.u_alpha.row(m).transpose();
    fused_lasso_.solve(target.data(), target.size(), params.lambda / s.rho_alpha[m], target.data());
    s.alpha.row(m) = target.transpose();
    s.u_alpha.row(m) += (dtheta - target).transpose();

    BlockResidual& r = s.alpha_residuals[m];
    r.primal = (dtheta - target).norm();
    r.dual = s.rho_alpha[m] * dk_.apply_transpose(target - alpha_old).norm();
    r.primal_scale = std::max(dtheta.norm(), target.norm());
    r.dual_scale = s.rho_alpha[m] * dk_.apply_transpose(s.u_alpha.row(m).transpose()).norm();
    r.primal_dim = target.size();
    r.dual_dim = p;
  }

  const Eigen::MatrixXd beta_old = s.beta;
  s.beta = s.theta + s.u_beta;
  if (groups > 1) {
    const double w = params.gamma / s.rho_beta;
    for (Index j = 0; j < p; ++j) {
      auto col = s.beta.col(j);
      fusion_.apply(col, w);
    }
  }
  s.u_beta += s.theta - s.beta;

  BlockResidual& rb = s.beta_residual;
  rb.primal = (s.theta - s.beta).norm();
  rb.dual = s.rho_beta * (s.beta - beta_old).norm();
  rb.primal_scale = std::max(s.theta.norm(), s.beta.norm());
  rb.dual_scale = s.rho_beta * s.u_beta.norm();
  rb.primal_dim = groups * p;
  rb.dual_dim = groups * p;
}

JadeFit JadeSolver::run(const PenaltyParams& params, AdmmState state) {
  if (!(params.lambda >= 0.0) || !(params.gamma >= 0.0)) {
    throw ParameterError("JadeSolver: lambda and gamma must be nonnegative");
  }
  if (params.k != k_) throw ParameterError("JadeSolver: params.k differs from the solver's trend order");
  state.iteration = 0;
  JadeFit fit;
  fit.params = params;
  for (int it = 0; it < options_.max_iterations; ++it) {
    iterate(state, params);
    if (check_convergence(state, options_.tol)) {
      fit.converged = true;
      break;
    }
    update_step_sizes(state, options_.step, options_.tol);
  }
  fit.iterations = state.iteration;
  fit.theta = state.theta;
  fit.beta = state.beta;
  fit.objective = jade_objective(data_, params, fit.theta);
  fit.state = std::move(state);
  return fit;
}

void theta_update(AdmmState& state, const GroupedDataset& data, const PenaltyParams& params) {
  JadeSolver solver(data, params.k);
  solver.theta_update(state);
}

namespace {

bool block_converged(const BlockResidual& r, const Tolerance& tol) {
  const double primal_eps = tol.abs * std::sqrt(static_cast<double>(r.primal_dim)) + tol.rel * r.primal_scale;
  const double dual_eps = tol.abs * std::sqrt(static_cast<double>(r.dual_dim)) + tol.rel * r.dual_scale;
  return r.primal <= primal_eps && r.dual <= dual_eps;
}

// Returns the new step size for one block.
double balanced_rho(double rho, const BlockResidual& r, const StepSizeRule& rule, const Tolerance& tol) {
  double primal = r.primal;
  double dual = r.dual;
  if (rule.normalized) {
    primal /= tol.abs * std::sqrt(static_cast<double>(r.primal_dim)) + tol.rel * r.primal_scale;
    dual /= tol.abs * std::sqrt(static_cast<double>(r.dual_dim)) + tol.rel * r.dual_scale;
  }
  if (primal > rule.trigger_ratio * dual) return std::min(rho * rule.factor, rule.max_rho);
  if (dual > rule.trigger_ratio * primal) return std::max(rho / rule.factor, rule.min_rho);
  return rho;
}

}  // namespace

bool check_convergence(const AdmmState& state, const Tolerance& tol) {
  if (state.iteration < 1) return false;
  for (const auto& r : state.alpha_residuals)
    if (!block_converged(r, tol)) return false;
  return block_converged(state.beta_residual, tol);
}

void update_step_sizes(AdmmState& state, const StepSizeRule& rule, const Tolerance& tol) {
  if (rule.spacing <= 0 || state.iteration % rule.spacing != 0) return;
  if (state.iteration > rule.adapt_until) return;
  for (Index m = 0; m < state.rho_alpha.size(); ++m) {
    const double old_rho = state.rho_alpha[m];
    const double new_rho = balanced_rho(old_rho, state.alpha_residuals[m], rule, tol);
    if (new_rho != old_rho) {
      state.rho_alpha[m] = new_rho;
      state.u_alpha.row(m) *= old_rho / new_rho;
    }
  }
  const double old_rho = state.rho_beta;
  const double new_rho = balanced_rho(old_rho, state.beta_residual, rule, tol);
  if (new_rho != old_rho) {
    state.rho_beta = new_rho;
    state.u_beta *= old_rho / new_rho;
  }
}

namespace {

void require_effective_sites(const GroupedDataset& data, int k) {
  for (Index m = 0; m < data.groups(); ++m) {
    const Index observed = (data.weights.row(m).array() > 0.0).count();
    if (observed < k + 2) {
      throw UnderdeterminedError("group " + std::to_string(m) + " has " + std::to_string(observed) +
                                 " observed sites; need at least k + 2 = " + std::to_string(k + 2));
    }
  }
}

}  // namespace

JadeFit solve_jade(const GroupedDataset& data, const PenaltyParams& params, const SolverOptions& options,
                   const std::optional<Eigen::MatrixXd>& init_beta) {
  data.validate();
  require_effective_sites(data, params.k);
  JadeSolver solver(data, params.k, options);
  return solver.solve(params, init_beta);
}

Eigen::VectorXd trend_filter(const SiteGrid& grid, const Eigen::VectorXd& targets, const Eigen::VectorXd& weights,
                             double lambda, int k, const SolverOptions& options) {
  if (!(lambda >= 0.0)) throw ParameterError("trend_filter: lambda must be nonnegative");
  if (targets.size() != grid.size() || weights.size() != grid.size()) {
    throw DimensionError("trend_filter: targets/weights must match the grid");
  }
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw DataError("trend_filter: weights must be finite and nonnegative");
  }
  GroupedDataset data;
  data.grid = grid;
  data.means = targets.transpose();
  data.weights = weights.cwiseSqrt().transpose();
  data.sizes = Eigen::VectorXd::Ones(1);
  require_effective_sites(data, k);
  JadeSolver solver(std::move(data), k, options);
  return solver.solve({lambda, 0.0, k, 0.0}).theta.row(0).transpose();
}

double max_separation(const Eigen::MatrixXd& profiles) {
  if (profiles.rows() < 2 || profiles.cols() == 0) return 0.0;
  return (profiles.colwise().maxCoeff() - profiles.colwise().minCoeff()).maxCoeff();
}

GammaGrid gamma_grid(const GroupedDataset& data, double lambda, int k, int count, const SolverOptions& options,
                     double fusion_tol) {
  if (count < 2) throw ParameterError("gamma_grid: count must be >= 2");
  data.validate();
  JadeSolver solver(data, k, options);
  const Eigen::MatrixXd q = data.quadratic_weights();

  // At lambda = 0 the per-site problem fuses once gamma exceeds the largest
  // weighted deviation from the pooled mean; that anchors the search range.
  double hint = 0.0;
  for (Index j = 0; j < data.sites(); ++j) {
    double total = 0.0;
    double pooled = 0.0;
    for (Index m = 0; m < data.groups(); ++m) {
      if (q(m, j) > 0.0) {
        total += q(m, j);
        pooled += q(m, j) * data.means(m, j);
      }
    }
    if (total <= 0.0) continue;
    pooled /= total;
    for (Index m = 0; m < data.groups(); ++m) {
      if (q(m, j) > 0.0) hint = std::max(hint, q(m, j) * std::abs(data.means(m, j) - pooled));
    }
  }
  const double mean_q = q.mean();
  const double start = hint > 0.0 ? hint / 256.0 : 1e-6 * std::max(1.0, mean_q);
  const double cap = std::max(hint, start) * 1024.0;

  GammaGrid out;
  AdmmState state = solver.initial_state(lambda);
  double gamma = start;
  for (;;) {
    JadeFit fit = solver.run({lambda, gamma, k, 0.0}, std::move(state));
    const double scale = std::max(1.0, fit.beta.cwiseAbs().maxCoeff());
    state = std::move(fit.state);
    if (max_separation(fit.beta) <= fusion_tol * scale) break;
    if (gamma >= cap) {
      out.capped = true;
      out.warnings.push_back("gamma_grid: full fusion not reached by gamma=" + std::to_string(gamma) +
                             "; using the cap as gamma_max");
      break;
    }
    gamma *= 2.0;
  }
  out.gamma_max = gamma;
  out.values.resize(count);
  for (int i = 0; i < count; ++i) {
    out.values[i] = gamma * std::pow(10.0, -3.0 * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

std::vector<JadeFit> solve_gamma_path(const GroupedDataset& data, double lambda, const std::vector<double>& gammas,
                                      int k, const SolverOptions& options, double epsilon) {
  data.validate();
  require_effective_sites(data, k);
  JadeSolver solver(data, k, options);
  std::vector<JadeFit> path;
  path.reserve(gammas.size());
  AdmmState state = solver.initial_state(lambda);
  for (double gamma : gammas) {
    const PenaltyParams params{lambda, gamma, k, epsilon};
    try {
      JadeFit fit = solver.run(params, state);
      state = fit.state;
      path.push_back(std::move(fit));
    } catch (const Error& e) {
      JadeFit failed;
      failed.params = params;
      failed.error = e.what();
      path.push_back(std::move(failed));
    }
  }
  return path;
}

}  // namespace jade
