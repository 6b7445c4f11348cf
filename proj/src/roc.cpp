#include "jade/roc.hpp"

#include <algorithm>
#include <numeric>

#include "jade/error.hpp"

namespace jade {

namespace {

std::pair<Index, Index> class_counts(const std::vector<bool>& truth) {
  const Index pos = std::count(truth.begin(), truth.end(), true);
  const Index neg = static_cast<Index>(truth.size()) - pos;
  if (pos == 0 || neg == 0) throw UndefinedRateError("ROC: truth mask must contain both classes");
  return {pos, neg};
}

void sort_curve(RocCurve& curve) {
  std::sort(curve.begin(), curve.end(), [](const RocPoint& a, const RocPoint& b) {
    return a.fpr < b.fpr || (a.fpr == b.fpr && a.tpr < b.tpr);
  });
}

}  // namespace

RocPoint rates(const std::vector<bool>& detected, const std::vector<bool>& truth) {
  if (detected.size() != truth.size()) throw DimensionError("rates: mask length mismatch");
  const auto [pos, neg] = class_counts(truth);
  Index tp = 0, fp = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (!detected[j]) continue;
    (truth[j] ? tp : fp) += 1;
  }
  return {static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)};
}

RocCurve roc_from_scores(const Eigen::VectorXd& scores, const std::vector<bool>& truth) {
  if (static_cast<std::size_t>(scores.size()) != truth.size()) throw DimensionError("roc_from_scores: length mismatch");
  const auto [pos, neg] = class_counts(truth);
  std::vector<Index> order(truth.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });

  RocCurve curve{{0.0, 0.0}};
  Index tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (truth[order[i]] ? tp : fp) += 1;
    const bool last_of_tie = i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]];
    if (last_of_tie) {
      curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                       static_cast<double>(tp) / static_cast<double>(pos)});
    }
  }
  sort_curve(curve);
  return curve;
}

RocCurve roc_from_masks(const std::vector<std::vector<bool>>& detections, const std::vector<bool>& truth) {
  class_counts(truth);
  RocCurve curve{{0.0, 0.0}, {1.0, 1.0}};
  for (const auto& mask : detections) curve.push_back(rates(mask, truth));
  sort_curve(curve);
  return curve;
}

double interpolate_tpr(const RocCurve& curve, double fpr) {
  if (curve.empty()) throw ParameterError("interpolate_tpr: empty curve");
  std::vector<RocPoint> sorted = curve;
  sort_curve(sorted);
  std::vector<RocPoint> env;
  for (const RocPoint& pt : sorted) {
    if (!env.empty() && env.back().fpr == pt.fpr) {
      env.back().tpr = std::max(env.back().tpr, pt.tpr);
    } else {
      env.push_back({pt.fpr, env.empty() ? pt.tpr : std::max(pt.tpr, env.back().tpr)});
    }
  }
  if (fpr <= env.front().fpr) return env.front().tpr;
  for (std::size_t i = 1; i < env.size(); ++i) {
    if (fpr > env[i].fpr) continue;
    const RocPoint& a = env[i - 1];
    const RocPoint& b = env[i];
    if (b.fpr == a.fpr) return b.tpr;
    return a.tpr + (b.tpr - a.tpr) * (fpr - a.fpr) / (b.fpr - a.fpr);
  }
  return env.back().tpr;
}

std::vector<Index> bh_fdr(const std::vector<double>& pvalues, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("bh_fdr: level must be in (0, 1]");
  const std::size_t n = pvalues.size();
  for (double pv : pvalues)
    if (!(pv >= 0.0 && pv <= 1.0)) throw DataError("bh_fdr: p-values must lie in [0, 1]");
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return pvalues[a] < pvalues[b]; });
  std::size_t cutoff = 0;
  for (std::size_t r = n; r >= 1; --r) {
    if (pvalues[order[r - 1]] <= q * static_cast<double>(r) / static_cast<double>(n)) {
      cutoff = r;
      break;
    }
  }
  std::vector<Index> rejected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cutoff));
  std::sort(rejected.begin(), rejected.end());
  return rejected;
}

}  // namespace jade
