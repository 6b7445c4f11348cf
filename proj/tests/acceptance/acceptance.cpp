// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failures. Arguments select criteria by name (e.g. AC1 AC7).

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracle/dense_ops.hpp"
#include "../oracle/enumeration.hpp"
#include "../oracle/frozen_objectives.hpp"
#include "../oracle/instances.hpp"
#include "../unit/helpers.hpp"
#include "jade/admm.hpp"
#include "jade/bench.hpp"
#include "jade/diffops.hpp"
#include "jade/pipeline.hpp"
#include "jade/prox.hpp"
#include "jade/regions.hpp"
#include "jade/tuning.hpp"

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks; the first few messages go into the report.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    Outcome o;
    o.pass = failures_ == 0;
    o.detail = summary + " [" + std::to_string(checks_ - failures_) + "/" + std::to_string(checks_) + " checks]";
    if (!notes_.empty()) o.detail += " " + notes_;
    return o;
  }

 private:
  int checks_ = 0;
  int failures_ = 0;
  std::string notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Outcome solver_oracle() {
  Checker c;
  double worst = 0.0;
  for (int s = 0; s < 50; ++s) {
    const oracle::JadeProblem pr = oracle::random_instance(static_cast<std::uint64_t>(s));
    const jade::JadeFit fit = jade::solve_jade(testutil::to_dataset(pr), testutil::params_of(pr));
    const double ref = oracle::kFrozenObjectives[s];
    const double rel = std::abs(oracle::jade_objective(pr, fit.theta) - ref) / std::abs(ref);
    worst = std::max(worst, rel);
    c.expect(fit.converged, "instance " + std::to_string(s) + " did not converge");
    c.expect(rel <= 1e-4, "instance " + std::to_string(s) + fmt(" rel %.2e", rel));
  }
  return c.outcome("50 instances, worst relative gap " + fmt("%.2e", worst));
}

Outcome prox_exactness() {
  Checker c;
  std::mt19937_64 rng(20240);
  std::normal_distribution<double> z;
  double worst = 0.0;
  int instances = 0;
  for (int q = 1; q <= 6; ++q) {
    for (int rep = 0; rep < 60; ++rep) {
      Eigen::VectorXd y(q);
      for (auto& v : y) v = (rep % 4 == 0 ? 3.0 : 1.0) * z(rng);
      if (rep % 7 == 0 && q > 1) y[q - 1] = y[0];
      for (double lambda : {0.0, 0.001, 0.01, 0.05, 0.1, 0.3, 1.0, 3.0, 10.0}) {
        const Eigen::VectorXd b = jade::fused_lasso_1d(y, lambda);
        const double gap = oracle::fused_lasso_objective(y, lambda, b) - oracle::enumerate_fused_lasso(y, lambda).objective;
        worst = std::max(worst, gap);
        c.expect(gap <= 1e-6, "fused lasso q=" + std::to_string(q) + fmt(" gap %.2e", gap));
        ++instances;
      }
    }
  }
  for (int m = 2; m <= 4; ++m) {
    for (int rep = 0; rep < 60; ++rep) {
      Eigen::VectorXd v(m);
      for (auto& x : v) x = z(rng);
      if (rep % 5 == 0) v[m - 1] = v[0];
      for (double w : {0.0, 0.005, 0.02, 0.1, 0.3, 1.0, 5.0}) {
        const Eigen::VectorXd b = jade::fusion_prox_multi(v, w);
        const double gap = oracle::fusion_objective(v, w, b) - oracle::enumerate_fusion(v, w).objective;
        worst = std::max(worst, gap);
        c.expect(gap <= 1e-6, "fusion prox M=" + std::to_string(m) + fmt(" gap %.2e", gap));
        ++instances;
        if (m == 2 && rep < 20) {
          const auto grid = oracle::grid_fusion_pair(v[0], v[1], w, -4.0, 4.0, 1500);
          c.expect(oracle::fusion_objective(v, w, b) <= grid.objective + 1e-6, "pair prox above grid minimum");
        }
      }
    }
  }
  return c.outcome(std::to_string(instances) + " instances, worst objective gap " + fmt("%.1e", worst));
}

Outcome limit_identities() {
  Checker c;
  const jade::SolverOptions tight = testutil::tight();
  double worst0 = 0.0, worst_max = 0.0;
  for (int s = 0; s < 20; ++s) {
    const int groups = 2 + s % 2;
    const int k = s % 3;
    const double lambda = 0.1 + 0.05 * (s % 5);
    const jade::GroupedDataset d = testutil::bumpy(1000 + s, groups, 40);
    const Eigen::MatrixXd q = d.quadratic_weights();

    const jade::JadeFit apart = jade::solve_jade(d, {lambda, 0.0, k, 0.005}, tight);
    c.expect(apart.converged, "gamma=0 fit did not converge");
    for (int m = 0; m < groups; ++m) {
      const Eigen::VectorXd tf =
          jade::trend_filter(d.grid, d.means.row(m).transpose(), q.row(m).transpose(), lambda, k, tight);
      const double err = max_abs(apart.theta.row(m).transpose() - tf);
      worst0 = std::max(worst0, err);
      c.expect(err <= 1e-5, "dataset " + std::to_string(s) + fmt(" gamma=0 error %.2e", err));
    }

    const jade::GammaGrid gg = jade::gamma_grid(d, lambda, k, 2, tight);
    c.expect(!gg.capped, "gamma_max search capped");
    const jade::JadeFit fused = jade::solve_jade(d, {lambda, gg.gamma_max, k, 0.005}, tight);
    c.expect(fused.converged, "gamma_max fit did not converge");
    const jade::GroupedDataset pooled = jade::pool_groups(d);
    const Eigen::VectorXd common = jade::trend_filter(d.grid, pooled.means.row(0).transpose(),
                                                      pooled.quadratic_weights().row(0).transpose(),
                                                      groups * lambda, k, tight);
    for (int m = 0; m < groups; ++m) {
      const double err = max_abs(fused.theta.row(m).transpose() - common);
      worst_max = std::max(worst_max, err);
      c.expect(err <= 1e-5, "dataset " + std::to_string(s) + fmt(" gamma_max error %.2e", err));
    }
  }
  return c.outcome("20 datasets, worst error " + fmt("%.1e", worst0) + " at gamma=0, " + fmt("%.1e", worst_max) +
                   " at gamma_max");
}

Outcome dominance(const jade::SimConfig& sim, const char* baseline) {
  Checker c;
  jade::BenchConfig cfg;
  cfg.sim = sim;
  cfg.replicates = 50;
  const jade::BenchResult r = jade::run_bench(cfg);
  const auto& ours = r.method("jade");
  const auto& theirs = r.method(baseline);
  std::string summary = jade::setting_label(sim);
  for (double fpr : {0.02, 0.05, 0.10}) {
    std::size_t i = 0;
    while (i < ours.fpr.size() && std::abs(ours.fpr[i] - fpr) > 1e-12) ++i;
    c.expect(i < ours.fpr.size(), fmt("fpr %.2f missing from grid", fpr));
    if (i == ours.fpr.size()) continue;
    c.expect(ours.mean_tpr[i] > theirs.mean_tpr[i] - 0.02,
             fmt("fpr %.2f: ", fpr) + fmt("jade %.3f", ours.mean_tpr[i]) + fmt(" vs %.3f", theirs.mean_tpr[i]));
    summary += fmt(" fpr=%.2f:", fpr) + fmt(" %.3f", ours.mean_tpr[i]) + fmt(" vs %.3f", theirs.mean_tpr[i]);
  }
  std::size_t warned = 0;
  for (const auto& rep : r.replicates) warned += rep.warnings.size();
  summary += ", " + std::to_string(warned) + " path warnings";
  return c.outcome(summary);
}

Outcome normal_dominance() {
  jade::SimConfig ar;
  ar.regime = jade::Regime::AutoRegressive;
  ar.sigma = 1.0;
  ar.ar_rho = 0.0;
  const Outcome a = dominance(ar, "t_raw");
  const Outcome b = dominance(jade::SimConfig::random_effects(0.05), "t_raw");
  return {a.pass && b.pass, a.detail + " | " + b.detail};
}

Outcome binomial_dominance() {
  jade::SimConfig sim;
  sim.regime = jade::Regime::Binomial;
  sim.sigma_re = 0.02;
  sim.spacing = 5.0;
  return dominance(sim, "t_raw");
}

Eigen::MatrixXd lifted(int p, std::initializer_list<std::pair<int, int>> spans) {
  Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(3, p, 0.5);
  for (auto [a, b] : spans)
    for (int j = a; j <= b; ++j) beta(2, j) += 0.3;
  return beta;
}

Outcome region_rules() {
  Checker c;
  const jade::SiteGrid grid = jade::SiteGrid::even(40);

  const auto merged = jade::extract_regions(lifted(40, {{10, 14}, {16, 20}}), grid, 0.005);
  c.expect(merged.regions.size() == 1 && merged.regions[0].start == 10 && merged.regions[0].end == 20,
           "single fused site not merged");
  const auto apart = jade::extract_regions(lifted(40, {{10, 14}, {17, 20}}), grid, 0.005);
  c.expect(apart.regions.size() == 2, "two fused sites merged");

  Eigen::MatrixXd chain = lifted(40, {{5, 15}});
  chain.col(10) << 0.5, 0.504, 0.508;
  const auto inv = jade::extract_regions(chain, grid, 0.005);
  c.expect(inv.regions.size() == 2 && inv.regions[0].end == 9 && inv.regions[1].start == 11,
           "invalid site not removed");
  c.expect(inv.invalid_sites == std::vector<jade::Index>{10}, "invalid site not reported");
  c.expect(!jade::partition_at_site(chain.col(10), 0.005).valid, "chain partition reported valid");

  Eigen::MatrixXd subs = lifted(40, {{10, 20}});
  for (int j = 15; j <= 20; ++j) subs(0, j) = 0.1;
  const auto sr = jade::extract_regions(subs, grid, 0.005);
  c.expect(sr.regions.size() == 1, "sub-region input split");
  if (sr.regions.size() == 1) {
    const auto& s = sr.regions[0].subregions;
    c.expect(s.size() == 2, "expected two sub-regions");
    if (s.size() == 2) {
      c.expect(s[0].start == 10 && s[0].end == 14 && s[0].partition.signature() == "12|3", "first sub-region");
      c.expect(s[1].start == 15 && s[1].end == 20 && s[1].partition.signature() == "1|2|3", "second sub-region");
    }
  }
  c.expect(jade::extract_regions(Eigen::MatrixXd::Constant(3, 40, 0.5), grid, 0.005).regions.empty(),
           "fused profiles produced a region");
  return c.outcome("merge, invalid-partition removal, sub-regions");
}

std::string slurp_outputs(const jade::PipelineResult& r, double epsilon) {
  std::ostringstream out;
  jade::write_bed(out, r);
  jade::write_profiles(out, r, epsilon);
  return out.str();
}

Outcome structural() {
  Checker c;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  for (int k = 0; k <= 4; ++k) {
    Eigen::VectorXd s(15);
    double x = 0.0;
    for (auto& v : s) v = (x += u(rng));
    const jade::SiteGrid g(s);
    const Eigen::MatrixXd lhs = jade::build_trend_operator(g, k).dense();
    const Eigen::MatrixXd rhs =
        jade::build_first_difference(15 - k - 1).dense() * jade::build_scaled_kth_difference(g, k).dense();
    c.expect(max_abs(lhs - rhs) <= 1e-12 * std::max(1.0, max_abs(rhs)), "decomposition identity k=" + std::to_string(k));
    c.expect(max_abs(lhs - oracle::dense_trend_operator(s, k)) <= 1e-10 * std::max(1.0, max_abs(lhs)),
             "banded operator differs from dense k=" + std::to_string(k));
    const auto d = jade::build_trend_operator(g, k);
    for (int deg = 0; deg <= k; ++deg) {
      const Eigen::VectorXd v = s.array().pow(deg);
      c.expect(max_abs(d.apply(v)) <= 1e-9 * std::max(1.0, max_abs(v)), "null space k=" + std::to_string(k));
    }
  }

  const jade::FoldPlan ex = jade::make_folds(10, 2, 5);
  std::set<std::pair<int, int>> fold0;
  for (int m = 0; m < 2; ++m)
    for (int j = 0; j < 10; ++j)
      if (ex.assignment(m, j) == 0) fold0.insert({m, j});
  c.expect(fold0 == std::set<std::pair<int, int>>{{0, 0}, {0, 5}, {1, 1}, {1, 6}}, "fold example");
  for (jade::Index p : {10, 23, 31, 64}) {
    for (jade::Index groups = 2; groups <= 4; ++groups) {
      for (int l : {3, 5, 7}) {
        const jade::FoldPlan plan = jade::make_folds(p, groups, l);
        jade::Index total = 0;
        for (int f = 0; f < l; ++f) total += plan.fold_size(f);
        c.expect(total == p * groups, "folds do not partition");
        for (jade::Index m = 0; m < groups; ++m) {
          int lo = 1 << 30, hi = 0;
          for (int f = 0; f < l; ++f) {
            const int n = static_cast<int>((plan.assignment.row(m).array() == f).count());
            lo = std::min(lo, n);
            hi = std::max(hi, n);
          }
          c.expect(hi - lo <= 1, "per-group fold sizes uneven");
        }
        if (groups <= l) {
          for (jade::Index j = 0; j < p; ++j) {
            std::set<int> seen;
            for (jade::Index m = 0; m < groups; ++m) seen.insert(plan.assignment(m, j));
            c.expect(static_cast<jade::Index>(seen.size()) == groups, "site folds not distinct");
          }
        }
      }
    }
  }

  std::normal_distribution<double> z;
  for (int t = 0; t < 300; ++t) {
    Eigen::VectorXd v(2 + t % 5);
    for (auto& x : v) x = z(rng);
    const double w = 0.01 + 0.5 * u(rng);
    const Eigen::VectorXd b = jade::fusion_prox_multi(v, w);
    c.expect(std::abs(b.mean() - v.mean()) <= 1e-12, "fusion prox mean not preserved");
    for (Eigen::Index i = 0; i < v.size(); ++i)
      for (Eigen::Index j = 0; j < v.size(); ++j)
        if (v[i] < v[j]) c.expect(b[i] <= b[j] + 1e-12, "fusion prox order not preserved");
  }

  jade::PipelineConfig cfg;
  cfg.input = std::string(JADE_TEST_DATA_DIR) + "/fixture_counts.tsv";
  cfg.out_dir = std::filesystem::temp_directory_path() / "jade_acceptance";
  cfg.workers = 1;
  const std::string serial = slurp_outputs(jade::run_pipeline(cfg), cfg.epsilon);
  cfg.workers = 4;
  c.expect(serial == slurp_outputs(jade::run_pipeline(cfg), cfg.epsilon), "pipeline output depends on workers");
  std::filesystem::remove_all(cfg.out_dir);

  jade::BenchConfig bench;
  bench.sim.p = 100;
  bench.sim.seed = 5;
  bench.replicates = 3;
  bench.lambda_count = 8;
  bench.gamma_count = 12;
  std::string outs[2];
  for (unsigned w : {1u, 3u}) {
    bench.workers = w;
    std::ostringstream o;
    jade::write_bench_csv(o, jade::run_bench(bench));
    outs[w == 3] = o.str();
  }
  c.expect(outs[0] == outs[1], "bench output depends on workers");
  return c.outcome("operators, folds, fusion prox, determinism at 1/4 and 1/3 workers");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1", solver_oracle},      {"AC2", prox_exactness},     {"AC3", limit_identities},
      {"AC4", normal_dominance},   {"AC5", binomial_dominance}, {"AC6", region_rules},
      {"AC7", structural},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s (%.1f s) %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures;
}
