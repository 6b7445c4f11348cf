#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "jade/bench.hpp"
#include "jade/error.hpp"
#include "jade/pipeline.hpp"
#include "jade/version.hpp"

namespace {

constexpr int kExitUnconverged = 3;

int run_fit(const jade::PipelineConfig& config) {
  const jade::PipelineResult result = jade::run_pipeline(config);
  jade::write_outputs(result, config);
  std::size_t converged = 0;
  std::size_t regions = 0;
  for (const auto& s : result.segments) {
    if (!s.converged) {
      std::cerr << "segment " << s.segment.chrom << ':' << s.segment.positions.front() << '-'
                << s.segment.positions.back() << " failed: " << s.error << '\n';
      continue;
    }
    ++converged;
    regions += s.regions.regions.size();
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << converged << '/' << result.segments.size() << " segments converged, " << regions << " regions\n";
  return result.all_converged() ? 0 : kExitUnconverged;
}

int run_simbench(const jade::BenchConfig& config, const std::string& out, const std::string& replicates_out) {
  const jade::BenchResult result = jade::run_bench(config);
  if (out == "-") {
    jade::write_bench_csv(std::cout, result);
  } else {
    std::ofstream f(out);
    if (!f) throw jade::IoError("cannot write " + out);
    jade::write_bench_csv(f, result);
  }
  if (!replicates_out.empty()) {
    std::ofstream f(replicates_out);
    if (!f) throw jade::IoError("cannot write " + replicates_out);
    jade::write_replicate_csv(f, config, result);
  }
  for (const auto& m : result.methods) {
    if (!m.has_operating_point) continue;
    std::cerr << m.method << " operating point: fpr " << m.operating.fpr << " tpr " << m.operating.tpr << '\n';
  }
  std::cerr << result.setting << ": " << config.replicates << " replicates in " << result.seconds << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint smoothing and fusion of grouped genomic profiles"};
  app.set_version_flag("--version", std::string(jade::kVersion));
  app.require_subcommand(1);

  jade::PipelineConfig fit;
  std::string input;
  std::string out_dir;
  auto* fit_cmd = app.add_subcommand("fit", "Detect differential regions in a count table");
  fit_cmd->add_option("--input", input, "TSV with columns chrom pos group rep reads count")->required();
  fit_cmd->add_option("--out", out_dir, "Output directory")->required();
  fit_cmd->add_option("--order,-k", fit.k, "Trend filtering order")->capture_default_str()->check(CLI::Range(0, 5));
  fit_cmd->add_option("--folds", fit.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 100));
  fit_cmd->add_option("--epsilon", fit.epsilon, "Fusion threshold")->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-gap", fit.max_gap, "Split segments at gaps of at least this many bp")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--min-sites", fit.min_sites, "Drop segments with fewer sites")->capture_default_str();
  fit_cmd->add_option("--workers", fit.workers, "Worker threads (0 = all cores)")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Recorded in the manifest")->capture_default_str();
  fit_cmd->add_option("--group-order", fit.group_order, "Group labels from earliest to latest")->delimiter(',');
  fit_cmd->add_option("--lambda-count", fit.lambda_count, "Lambda grid size")->capture_default_str();
  fit_cmd->add_option("--gamma-count", fit.gamma_count, "Gamma grid size")->capture_default_str();
  fit_cmd->add_option("--max-iterations", fit.options.max_iterations, "ADMM iteration cap")->capture_default_str();

  jade::BenchConfig bench;
  std::string regime = "ar";
  double re_fraction = -1.0;
  std::string bench_out = "-";
  std::string replicates_out;
  auto* sim_cmd = app.add_subcommand("simbench", "Simulation ROC benchmark against per-site t-tests");
  sim_cmd->add_option("--regime", regime, "ar, re or binomial")
      ->capture_default_str()
      ->check(CLI::IsMember({"ar", "re", "binomial"}));
  sim_cmd->add_option("--sigma", bench.sim.sigma, "Noise standard deviation")->capture_default_str();
  sim_cmd->add_option("--rho", bench.sim.ar_rho, "Autoregressive coefficient")->capture_default_str();
  sim_cmd->add_option("--sigma-re", bench.sim.sigma_re, "Random-effect standard deviation")->capture_default_str();
  sim_cmd->add_option("--re-fraction", re_fraction, "Random-effect variance fraction (total variance 5)");
  sim_cmd->add_option("--read-mean", bench.sim.read_mean, "Reads are 1 + Poisson(read-mean)")->capture_default_str();
  sim_cmd->add_option("--reps", bench.replicates, "Replicates")->capture_default_str();
  sim_cmd->add_option("--p", bench.sim.p, "Sites")->capture_default_str();
  sim_cmd->add_option("--n", bench.sim.n_per_group, "Observations per group")->capture_default_str();
  sim_cmd->add_option("--spacing", bench.sim.spacing, "Distance between sites")->capture_default_str();
  sim_cmd->add_option("--seed", bench.sim.seed, "Base seed")->capture_default_str();
  sim_cmd->add_option("--workers", bench.workers, "Worker threads (0 = all cores)")->capture_default_str();
  sim_cmd->add_option("--order,-k", bench.k, "Trend filtering order")->capture_default_str();
  sim_cmd->add_option("--epsilon", bench.epsilon, "Fusion threshold")->capture_default_str();
  sim_cmd->add_option("--gamma-count", bench.gamma_count, "Gamma path length")->capture_default_str();
  sim_cmd->add_option("--lambda-count", bench.lambda_count, "Lambda grid size")->capture_default_str();
  sim_cmd->add_flag("--smooth", bench.smoothed_baseline, "Add the pre-smoothed t-test baseline");
  sim_cmd->add_flag("--operating-points", bench.operating_points, "CV-selected JADE and BH 10% t-test points");
  sim_cmd->add_option("--out", bench_out, "Aggregated CSV path ('-' for stdout)")->capture_default_str();
  sim_cmd->add_option("--replicates-out", replicates_out, "Per-replicate CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) {
      fit.input = input;
      fit.out_dir = out_dir;
      return run_fit(fit);
    }
    if (regime == "re") {
      if (re_fraction >= 0.0) {
        const jade::SimConfig re = jade::SimConfig::random_effects(re_fraction);
        bench.sim.sigma = re.sigma;
        bench.sim.sigma_re = re.sigma_re;
      }
      bench.sim.regime = jade::Regime::RandomEffects;
    } else if (regime == "binomial") {
      bench.sim.regime = jade::Regime::Binomial;
    }
    return run_simbench(bench, bench_out, replicates_out);
  } catch (const jade::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
