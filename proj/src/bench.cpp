#include "jade/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "jade/error.hpp"
#include "jade/tuning.hpp"

namespace jade {

namespace {

std::mt19937_64 replicate_stream(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::vector<bool> separated(const Eigen::MatrixXd& beta, double eps) {
  std::vector<bool> mask(beta.cols());
  for (Index j = 0; j < beta.cols(); ++j) mask[j] = beta.col(j).maxCoeff() - beta.col(j).minCoeff() >= eps;
  return mask;
}

std::vector<bool> from_indices(const std::vector<Index>& idx, Index p) {
  std::vector<bool> mask(p, false);
  for (Index j : idx) mask[j] = true;
  return mask;
}

}  // namespace

const MethodSummary& BenchResult::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.method == name) return m;
  throw ParameterError("BenchResult: no method named " + name);
}

std::string setting_label(const SimConfig& sim) {
  std::string out = to_string(sim.regime);
  switch (sim.regime) {
    case Regime::AutoRegressive:
      out += "_sigma=" + format_number(sim.sigma) + "_rho=" + format_number(sim.ar_rho);
      break;
    case Regime::RandomEffects: {
      const double total = sim.sigma * sim.sigma + sim.sigma_re * sim.sigma_re;
      out += "_refrac=" + format_number(total > 0.0 ? sim.sigma_re * sim.sigma_re / total : 0.0);
      break;
    }
    case Regime::Binomial:
      out += "_sigma_re=" + format_number(sim.sigma_re);
      break;
  }
  return out;
}

ReplicateResult run_replicate(const BenchConfig& config, int index) {
  ReplicateResult result;
  result.index = index;
  std::mt19937_64 rng = replicate_stream(config.sim.seed, index);
  const SiteGrid grid = SiteGrid::even(config.sim.p, config.sim.spacing);
  MeanCurvePair curves = gen_mean_curves(config.sim.p);

  Observations obs;
  GroupedDataset data;
  if (config.sim.regime == Regime::Binomial) {
    curves = curves.rescaled();
    const BinomialObservations raw = simulate_binomial(config.sim, curves, rng);
    obs = proportions(raw);
    data = binomial_dataset(raw, grid);
  } else {
    obs = config.sim.regime == Regime::AutoRegressive ? simulate_ar(config.sim, curves, rng)
                                                      : simulate_re(config.sim, curves, rng);
    data = normal_dataset(obs, grid);
  }
  const std::vector<bool>& truth = curves.truth;

  result.curves["t_raw"] = roc_from_scores(welch_t_scores(obs.groups[0], obs.groups[1]), truth);
  if (config.operating_points) {
    result.operating["t_raw"] =
        rates(from_indices(bh_fdr(welch_p_values(obs.groups[0], obs.groups[1]), 0.10), config.sim.p), truth);
  }
  if (config.smoothed_baseline) {
    const Observations smooth = smooth_observations(obs, grid, 15, config.options);
    result.curves["t_smooth"] = roc_from_scores(welch_t_scores(smooth.groups[0], smooth.groups[1]), truth);
    if (config.operating_points) {
      result.operating["t_smooth"] = rates(
          from_indices(bh_fdr(welch_p_values(smooth.groups[0], smooth.groups[1]), 0.10), config.sim.p), truth);
    }
  }

  const FoldPlan plan = make_folds(config.sim.p, data.groups(), config.folds);
  const CvCurve lambda_cv =
      cv_lambda(data, lambda_grid(data, config.k, config.lambda_count), plan, config.k, config.options);
  for (const auto& w : lambda_cv.warnings) result.warnings.push_back(w);
  result.lambda = lambda_cv.selected;

  const GammaGrid gg = gamma_grid(data, result.lambda, config.k, config.gamma_count, config.options);
  for (const auto& w : gg.warnings) result.warnings.push_back(w);
  result.gamma_max = gg.gamma_max;
  const std::vector<JadeFit> path =
      solve_gamma_path(data, result.lambda, gg.values, config.k, config.options, config.epsilon);
  std::vector<std::vector<bool>> masks;
  for (const JadeFit& fit : path) {
    if (!fit.error.empty()) {
      result.warnings.push_back("jade path point dropped: " + fit.error);
      continue;
    }
    if (!fit.converged) result.warnings.push_back("jade path point did not converge");
    masks.push_back(separated(fit.beta, config.epsilon));
  }
  result.curves["jade"] = roc_from_masks(masks, truth);

  if (config.operating_points) {
    const CvCurve gamma_cv = cv_gamma(data, result.lambda, gg.values, plan, config.k, config.options);
    for (const auto& w : gamma_cv.warnings) result.warnings.push_back(w);
    for (std::size_t i = 0; i < gg.values.size(); ++i) {
      if (gg.values[i] == gamma_cv.selected && path[i].error.empty()) {
        result.operating["jade"] = rates(separated(path[i].beta, config.epsilon), truth);
        break;
      }
    }
  }
  return result;
}

BenchResult summarize(const BenchConfig& config, std::vector<ReplicateResult> replicates) {
  BenchResult out;
  out.setting = setting_label(config.sim);
  std::vector<std::string> names = {"jade", "t_raw"};
  if (config.smoothed_baseline) names.push_back("t_smooth");
  for (const std::string& name : names) {
    MethodSummary s;
    s.method = name;
    s.fpr = config.fpr_grid;
    for (double f : config.fpr_grid) {
      std::vector<double> tpr;
      for (const auto& r : replicates) {
        const auto it = r.curves.find(name);
        if (it != r.curves.end()) tpr.push_back(interpolate_tpr(it->second, f));
      }
      double mean = 0.0;
      for (double t : tpr) mean += t;
      mean = tpr.empty() ? std::nan("") : mean / static_cast<double>(tpr.size());
      double var = 0.0;
      for (double t : tpr) var += (t - mean) * (t - mean);
      s.mean_tpr.push_back(mean);
      s.sd_tpr.push_back(tpr.size() > 1 ? std::sqrt(var / static_cast<double>(tpr.size() - 1)) : 0.0);
    }
    int n_op = 0;
    for (const auto& r : replicates) {
      const auto it = r.operating.find(name);
      if (it == r.operating.end()) continue;
      s.operating.fpr += it->second.fpr;
      s.operating.tpr += it->second.tpr;
      ++n_op;
    }
    if (n_op > 0) {
      s.has_operating_point = true;
      s.operating.fpr /= n_op;
      s.operating.tpr /= n_op;
    }
    out.methods.push_back(std::move(s));
  }
  out.replicates = std::move(replicates);
  return out;
}

BenchResult run_bench(const BenchConfig& config) {
  if (config.replicates < 1) throw ParameterError("run_bench: replicates must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  std::vector<ReplicateResult> results(config.replicates);
  std::vector<std::string> failures(config.replicates);
  unsigned workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.workers;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.replicates));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < config.replicates; i = next++) {
      try {
        results[i] = run_replicate(config, i);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (int i = 0; i < config.replicates; ++i) {
    if (!failures[i].empty()) throw NumericalError("replicate " + std::to_string(i) + " failed: " + failures[i]);
  }
  BenchResult out = summarize(config, std::move(results));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void write_bench_csv(std::ostream& out, const BenchResult& result, bool header) {
  if (header) out << "method,setting,fpr,mean_tpr,sd_tpr\n";
  for (const auto& m : result.methods) {
    for (std::size_t i = 0; i < m.fpr.size(); ++i) {
      out << m.method << ',' << result.setting << ',' << format_number(m.fpr[i]) << ','
          << format_number(m.mean_tpr[i]) << ',' << format_number(m.sd_tpr[i]) << '\n';
    }
  }
}

void write_replicate_csv(std::ostream& out, const BenchConfig& config, const BenchResult& result, bool header) {
  if (header) out << "method,setting,replicate,fpr,tpr\n";
  for (const auto& r : result.replicates) {
    for (const auto& [name, curve] : r.curves) {
      for (double f : config.fpr_grid) {
        out << name << ',' << result.setting << ',' << r.index << ',' << format_number(f) << ','
            << format_number(interpolate_tpr(curve, f)) << '\n';
      }
    }
  }
}

}  // namespace jade
