#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "jade/admm.hpp"

namespace jade {

/// Assignment of every (group, site) point to one of `folds` folds.
struct FoldPlan {
  int folds = 0;
  Eigen::MatrixXi assignment;  // M x p, 0-based fold index

  bool held_out(Index m, Index j, int fold) const { return assignment(m, j) == fold; }
  Index fold_size(int fold) const { return (assignment.array() == fold).count(); }
};

/// Cyclic folds along positions, staggered by one position per group so the M
/// points at one site land in distinct folds whenever M <= l:
///   fold(m, j) = (j - m) mod l   (0-based m, j).
FoldPlan make_folds(Index p, Index groups, int folds);

struct CvCurve {
  std::vector<double> grid;  // increasing regularization
  std::vector<double> mean_error;
  std::vector<double> std_error;
  double selected = 0.0;
  Index selected_index = 0;
  int folds_used = 0;
  std::vector<std::string> warnings;
};

/// One-standard-error rule over a grid ordered by increasing regularization:
/// the last index whose error is within min(errors) + ses[argmin]. Returns the
/// selected index.
Index one_se_select(const std::vector<double>& errors, const std::vector<double>& ses);

/// Collapses all groups onto one profile: site weight sum_m N_m a_mj^2 and the
/// correspondingly weighted mean. The fully fused JADE problem at lambda is
/// this single trend filter at M * lambda.
GroupedDataset pool_groups(const GroupedDataset& data);

/// Copy of `data` with the fold's points given zero weight.
GroupedDataset hold_out(const GroupedDataset& data, const FoldPlan& plan, int fold);

/// Smallest lambda at which the fully fused fit is a degree-k polynomial, from
/// the dual certificate D^T u = W (y - polynomial fit) of the pooled problem:
/// lambda = ||u||_inf / M.
double lambda_max(const GroupedDataset& data, int k);

/// `count` log-spaced values in [lambda_max / 1e4, lambda_max], increasing.
std::vector<double> lambda_grid(const GroupedDataset& data, int k, int count = 30);

/// Stage 1: cross-validate lambda on the fully fused problem (pooled data,
/// penalty M * lambda).
CvCurve cv_lambda(const GroupedDataset& data, const std::vector<double>& lambdas, const FoldPlan& plan, int k,
                  const SolverOptions& options = {});

/// Stage 2: lambda fixed, cross-validate gamma along warm-started paths.
CvCurve cv_gamma(const GroupedDataset& data, double lambda, const std::vector<double>& gammas, const FoldPlan& plan,
                 int k, const SolverOptions& options = {});

}  // namespace jade
