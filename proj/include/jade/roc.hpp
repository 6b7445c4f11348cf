#pragma once

#include <Eigen/Dense>

#include <vector>

#include "jade/diffops.hpp"

namespace jade {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Points sorted by FPR (then TPR), always including (0,0) and (1,1).
using RocCurve = std::vector<RocPoint>;

/// Threshold sweep: a site is called at threshold t when score >= t. One point
/// per distinct score, from the strictest threshold down.
RocCurve roc_from_scores(const Eigen::VectorXd& scores, const std::vector<bool>& truth);

/// One point per detection mask (e.g. one per gamma along a path).
RocCurve roc_from_masks(const std::vector<std::vector<bool>>& detections, const std::vector<bool>& truth);

/// (FPR, TPR) of one detection mask.
RocPoint rates(const std::vector<bool>& detected, const std::vector<bool>& truth);

/// TPR at `fpr` by linear interpolation of the running-maximum TPR envelope.
double interpolate_tpr(const RocCurve& curve, double fpr);

/// Benjamini-Hochberg step-up at level q; returns rejected indices, ascending.
std::vector<Index> bh_fdr(const std::vector<double>& pvalues, double q = 0.10);

}  // namespace jade
