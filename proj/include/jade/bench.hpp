#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "jade/simbench.hpp"

namespace jade {

struct BenchConfig {
  SimConfig sim;
  int replicates = 50;
  std::vector<double> fpr_grid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0};
  bool smoothed_baseline = false;
  bool operating_points = false;  // CV-selected gamma for JADE, BH at 10% for t-tests
  int k = 2;
  int folds = 5;
  int lambda_count = 30;
  int gamma_count = 100;
  double epsilon = 0.005;
  unsigned workers = 0;  // 0 = hardware concurrency
  SolverOptions options;
};

struct ReplicateResult {
  int index = 0;
  std::map<std::string, RocCurve> curves;
  std::map<std::string, RocPoint> operating;
  double lambda = 0.0;
  double gamma_max = 0.0;
  std::vector<std::string> warnings;
};

struct MethodSummary {
  std::string method;
  std::vector<double> fpr;
  std::vector<double> mean_tpr;
  std::vector<double> sd_tpr;
  bool has_operating_point = false;
  RocPoint operating;  // averaged over replicates
};

struct BenchResult {
  std::string setting;
  std::vector<MethodSummary> methods;
  std::vector<ReplicateResult> replicates;
  double seconds = 0.0;

  const MethodSummary& method(const std::string& name) const;
};

/// Label such as "ar_sigma=1_rho=0".
std::string setting_label(const SimConfig& sim);

/// One simulated dataset, scored by JADE and the t-test baselines. The random
/// stream depends only on (sim.seed, index).
ReplicateResult run_replicate(const BenchConfig& config, int index);

/// Replicates run on a worker pool; results are ordered by replicate index.
BenchResult run_bench(const BenchConfig& config);

BenchResult summarize(const BenchConfig& config, std::vector<ReplicateResult> replicates);

/// Columns: method, setting, fpr, mean_tpr, sd_tpr.
void write_bench_csv(std::ostream& out, const BenchResult& result, bool header = true);

/// Columns: method, setting, replicate, fpr, tpr (interpolated on the grid).
void write_replicate_csv(std::ostream& out, const BenchConfig& config, const BenchResult& result, bool header = true);

}  // namespace jade
