#include "jade/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace jade {

FoldPlan make_folds(Index p, Index groups, int folds) {
  if (folds < 2) throw ParameterError("make_folds: need at least 2 folds");
  if (groups < 1) throw ParameterError("make_folds: need at least one group");
  if (p < folds) {
    throw ParameterError("make_folds: more folds (" + std::to_string(folds) + ") than positions (" +
                         std::to_string(p) + ")");
  }
  FoldPlan plan;
  plan.folds = folds;
  plan.assignment.resize(groups, p);
  for (Index m = 0; m < groups; ++m) {
    for (Index j = 0; j < p; ++j) {
      const Index r = (j - m) % folds;
      plan.assignment(m, j) = static_cast<int>(r < 0 ? r + folds : r);
    }
  }
  return plan;
}

Index one_se_select(const std::vector<double>& errors, const std::vector<double>& ses) {
  if (errors.empty()) throw ParameterError("one_se_select: empty input");
  if (errors.size() != ses.size()) throw DimensionError("one_se_select: errors and ses differ in length");
  Index best = -1;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!std::isfinite(errors[i])) continue;
    if (best < 0 || errors[i] < errors[best]) best = static_cast<Index>(i);
  }
  if (best < 0) throw DataError("one_se_select: no finite errors");
  // Absolute slack so numerically tied errors count as ties.
  const double slack = 1e-12 * std::max(1.0, std::abs(errors[best]));
  const double threshold = errors[best] + ses[best] + slack;
  Index pick = best;
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (std::isfinite(errors[i]) && errors[i] <= threshold) pick = static_cast<Index>(i);
  return pick;
}

GroupedDataset pool_groups(const GroupedDataset& data) {
  const Eigen::MatrixXd q = data.quadratic_weights();
  const Index p = data.sites();
  GroupedDataset pooled;
  pooled.grid = data.grid;
  pooled.means = Eigen::MatrixXd::Zero(1, p);
  pooled.weights = Eigen::MatrixXd::Zero(1, p);
  pooled.sizes = Eigen::VectorXd::Ones(1);
  for (Index j = 0; j < p; ++j) {
    double total = 0.0;
    double acc = 0.0;
    for (Index m = 0; m < data.groups(); ++m) {
      if (q(m, j) > 0.0) {
        total += q(m, j);
        acc += q(m, j) * data.means(m, j);
      }
    }
    if (total > 0.0) {
      pooled.means(0, j) = acc / total;
      pooled.weights(0, j) = std::sqrt(total);
    }
  }
  return pooled;
}

GroupedDataset hold_out(const GroupedDataset& data, const FoldPlan& plan, int fold) {
  if (plan.assignment.rows() != data.groups() || plan.assignment.cols() != data.sites()) {
    throw DimensionError("hold_out: fold plan does not match the dataset");
  }
  GroupedDataset out = data;
  for (Index m = 0; m < data.groups(); ++m)
    for (Index j = 0; j < data.sites(); ++j)
      if (plan.held_out(m, j, fold)) out.weights(m, j) = 0.0;
  return out;
}

double lambda_max(const GroupedDataset& data, int k) {
  const GroupedDataset pooled = pool_groups(data);
  const Index p = pooled.sites();
  const Eigen::VectorXd w = pooled.quadratic_weights().row(0).transpose();
  const Eigen::VectorXd y = pooled.means.row(0).transpose();
  if ((w.array() > 0.0).count() < k + 1) throw UnderdeterminedError("lambda_max: fewer than k + 1 observed sites");

  const Eigen::VectorXd& s = pooled.grid.positions();
  const double center = s.mean();
  const double span = std::max(s.maxCoeff() - s.minCoeff(), 1e-300);
  Eigen::MatrixXd basis(p, k + 1);
  for (Index j = 0; j < p; ++j) {
    const double t = (s[j] - center) / span;
    double v = 1.0;
    for (int d = 0; d <= k; ++d, v *= t) basis(j, d) = v;
  }
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::VectorXd coef = (sw.asDiagonal() * basis).colPivHouseholderQr().solve(sw.cwiseProduct(y));
  const Eigen::VectorXd residual = w.cwiseProduct(y - basis * coef);

  const DiffOperator d = build_trend_operator(pooled.grid, k);
  const BandedCholesky<double> chol(d.outer_gram_lower());
  const Eigen::VectorXd u = chol.solve(d.apply(residual));
  return u.cwiseAbs().maxCoeff() / static_cast<double>(data.groups());
}

std::vector<double> lambda_grid(const GroupedDataset& data, int k, int count) {
  if (count < 2) throw ParameterError("lambda_grid: count must be >= 2");
  double top = lambda_max(data, k);
  if (!(top > 0.0)) top = 1.0;
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) {
    grid[i] = top * std::pow(10.0, -4.0 * static_cast<double>(count - 1 - i) / static_cast<double>(count - 1));
  }
  return grid;
}

namespace {

// Weighted squared error of `theta` at the fold's held-out points, normalized
// by their total weight. NaN when the fold holds no weighted points.
double held_out_error(const GroupedDataset& data, const Eigen::MatrixXd& q, const FoldPlan& plan, int fold,
                     const Eigen::MatrixXd& theta) {
  double err = 0.0;
  double total = 0.0;
  for (Index m = 0; m < data.groups(); ++m) {
    const Index row = theta.rows() == 1 ? 0 : m;
    for (Index j = 0; j < data.sites(); ++j) {
      if (!plan.held_out(m, j, fold) || q(m, j) <= 0.0) continue;
      const double r = data.means(m, j) - theta(row, j);
      err += q(m, j) * r * r;
      total += q(m, j);
    }
  }
  return total > 0.0 ? err / total : std::numeric_limits<double>::quiet_NaN();
}

void summarize(CvCurve& curve, const std::vector<std::vector<double>>& per_fold) {
  const std::size_t n = curve.grid.size();
  curve.mean_error.assign(n, std::numeric_limits<double>::quiet_NaN());
  curve.std_error.assign(n, 0.0);
  curve.folds_used = static_cast<int>(per_fold.size());
  if (per_fold.empty()) throw DataError("cross-validation: every fold was skipped");
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& f : per_fold) sum += f[i];
    const double mean = sum / static_cast<double>(per_fold.size());
    double ss = 0.0;
    for (const auto& f : per_fold) ss += (f[i] - mean) * (f[i] - mean);
    curve.mean_error[i] = mean;
    if (per_fold.size() > 1) {
      const double sd = std::sqrt(ss / static_cast<double>(per_fold.size() - 1));
      curve.std_error[i] = sd / std::sqrt(static_cast<double>(per_fold.size()));
    }
  }
  curve.selected_index = one_se_select(curve.mean_error, curve.std_error);
  curve.selected = curve.grid[curve.selected_index];
}

std::vector<double> ascending(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

CvCurve cv_lambda(const GroupedDataset& data, const std::vector<double>& lambdas, const FoldPlan& plan, int k,
                  const SolverOptions& options) {
  if (lambdas.empty()) throw ParameterError("cv_lambda: empty lambda grid");
  data.validate();
  CvCurve curve;
  curve.grid = ascending(lambdas);
  const Eigen::MatrixXd q = data.quadratic_weights();
  std::vector<std::vector<double>> per_fold;
  for (int fold = 0; fold < plan.folds; ++fold) {
    const GroupedDataset pooled = pool_groups(hold_out(data, plan, fold));
    const Index usable = (pooled.weights.array() > 0.0).count();
    if (usable < k + 2) {
      curve.warnings.push_back("cv_lambda: fold " + std::to_string(fold) + " skipped (" + std::to_string(usable) +
                               " usable sites)");
      continue;
    }
    JadeSolver solver(pooled, k, options);
    AdmmState state = solver.initial_state(curve.grid.back() * static_cast<double>(data.groups()));
    std::vector<double> errors(curve.grid.size());
    bool ok = true;
    for (std::size_t i = curve.grid.size(); i-- > 0;) {
      const double pooled_lambda = curve.grid[i] * static_cast<double>(data.groups());
      JadeFit fit = solver.run({pooled_lambda, 0.0, k, 0.0}, std::move(state));
      state = std::move(fit.state);
      errors[i] = held_out_error(data, q, plan, fold, fit.theta);
      if (!std::isfinite(errors[i])) ok = false;
    }
    if (!ok) {
      curve.warnings.push_back("cv_lambda: fold " + std::to_string(fold) + " skipped (no weighted held-out points)");
      continue;
    }
    per_fold.push_back(std::move(errors));
  }
  summarize(curve, per_fold);
  return curve;
}

CvCurve cv_gamma(const GroupedDataset& data, double lambda, const std::vector<double>& gammas, const FoldPlan& plan,
                 int k, const SolverOptions& options) {
  if (gammas.empty()) throw ParameterError("cv_gamma: empty gamma grid");
  data.validate();
  CvCurve curve;
  curve.grid = ascending(gammas);
  const std::vector<double> descending(curve.grid.rbegin(), curve.grid.rend());
  const Eigen::MatrixXd q = data.quadratic_weights();
  std::vector<std::vector<double>> per_fold;
  for (int fold = 0; fold < plan.folds; ++fold) {
    const GroupedDataset held = hold_out(data, plan, fold);
    bool usable = true;
    for (Index m = 0; m < held.groups(); ++m) usable = usable && (held.weights.row(m).array() > 0.0).count() >= k + 2;
    if (!usable) {
      curve.warnings.push_back("cv_gamma: fold " + std::to_string(fold) + " skipped (too few usable sites)");
      continue;
    }
    const std::vector<JadeFit> path = solve_gamma_path(held, lambda, descending, k, options);
    std::vector<double> errors(curve.grid.size());
    bool ok = true;
    for (std::size_t i = 0; i < path.size(); ++i) {
      const std::size_t idx = curve.grid.size() - 1 - i;
      if (!path[i].error.empty()) {
        ok = false;
        break;
      }
      errors[idx] = held_out_error(data, q, plan, fold, path[i].theta);
      if (!std::isfinite(errors[idx])) ok = false;
    }
    if (!ok) {
      curve.warnings.push_back("cv_gamma: fold " + std::to_string(fold) + " skipped (solver failure or no held-out points)");
      continue;
    }
    per_fold.push_back(std::move(errors));
  }
  summarize(curve, per_fold);
  return curve;
}

}  // namespace jade
