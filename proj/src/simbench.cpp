#include "jade/simbench.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "jade/error.hpp"
#include "jade/tuning.hpp"

namespace jade {

namespace {

double gaussian_bump(double x, double center, double width, double height) {
  const double z = (x - center) / width;
  return height * std::exp(-0.5 * z * z);
}

double window_bump(double x, double lo, double hi, double height) {
  if (x <= lo || x >= hi) return 0.0;
  const double s = std::sin(std::numbers::pi * (x - lo) / (hi - lo));
  return height * s * s;
}

void require_two_groups(const MeanCurvePair& curves, Index p) {
  if (curves.f1.size() != p || curves.f2.size() != p) throw DimensionError("simulate: curves do not match p");
}

}  // namespace

MeanCurvePair MeanCurvePair::rescaled() const {
  const double lo = std::min(f1.minCoeff(), f2.minCoeff());
  const double hi = std::max(f1.maxCoeff(), f2.maxCoeff());
  MeanCurvePair out = *this;
  if (hi > lo) {
    out.f1 = (f1.array() - lo) / (hi - lo);
    out.f2 = (f2.array() - lo) / (hi - lo);
  } else {
    out.f1.setZero();
    out.f2.setZero();
  }
  return out;
}

MeanCurvePair gen_mean_curves(Index p) {
  if (p < 100) throw ParameterError("gen_mean_curves: p must be >= 100");
  MeanCurvePair c;
  c.f1.resize(p);
  c.f2.resize(p);
  c.truth.assign(p, false);
  const double scale = 300.0 / static_cast<double>(p);
  for (Index j = 0; j < p; ++j) {
    const double x = (static_cast<double>(j) + 1.0) * scale;
    const double base = gaussian_bump(x, 40.0, 30.0, 1.2) + gaussian_bump(x, 150.0, 40.0, 0.8) +
                        gaussian_bump(x, 260.0, 35.0, 1.0);
    const double diff = window_bump(x, 55.0, 110.0, 1.0) + window_bump(x, 190.0, 230.0, 0.6);
    c.f1[j] = base;
    c.f2[j] = base + diff;
    c.truth[j] = diff > 0.0;
  }
  return c;
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::AutoRegressive:
      return "ar";
    case Regime::RandomEffects:
      return "re";
    default:
      return "binomial";
  }
}

SimConfig SimConfig::random_effects(double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ParameterError("random_effects: fraction must be in [0, 1)");
  SimConfig c;
  c.regime = Regime::RandomEffects;
  c.sigma = std::sqrt(5.0 * (1.0 - fraction));
  c.sigma_re = std::sqrt(5.0 * fraction);
  return c;
}

Observations simulate_ar(const SimConfig& config, const MeanCurvePair& curves, std::mt19937_64& rng) {
  require_two_groups(curves, config.p);
  std::normal_distribution<double> z(0.0, config.sigma);
  Observations obs;
  for (const Eigen::VectorXd* f : {&curves.f1, &curves.f2}) {
    Eigen::MatrixXd y(config.n_per_group, config.p);
    for (int i = 0; i < config.n_per_group; ++i) {
      double prev = 0.0;
      for (Index j = 0; j < config.p; ++j) {
        const double zj = z(rng);
        y(i, j) = (*f)[j] + zj + (j > 0 ? config.ar_rho * prev : 0.0);
        prev = zj;
      }
    }
    obs.groups.push_back(std::move(y));
  }
  return obs;
}

Observations simulate_re(const SimConfig& config, const MeanCurvePair& curves, std::mt19937_64& rng) {
  require_two_groups(curves, config.p);
  std::normal_distribution<double> z(0.0, config.sigma);
  std::normal_distribution<double> re(0.0, config.sigma_re);
  Observations obs;
  for (const Eigen::VectorXd* f : {&curves.f1, &curves.f2}) {
    Eigen::MatrixXd y(config.n_per_group, config.p);
    for (int i = 0; i < config.n_per_group; ++i) {
      const double b = config.sigma_re > 0.0 ? re(rng) : 0.0;
      for (Index j = 0; j < config.p; ++j) y(i, j) = (*f)[j] + b + z(rng);
    }
    obs.groups.push_back(std::move(y));
  }
  return obs;
}

BinomialObservations simulate_binomial(const SimConfig& config, const MeanCurvePair& curves, std::mt19937_64& rng) {
  require_two_groups(curves, config.p);
  std::normal_distribution<double> re(0.0, config.sigma_re);
  std::poisson_distribution<int> depth(config.read_mean);
  BinomialObservations obs;
  for (const Eigen::VectorXd* f : {&curves.f1, &curves.f2}) {
    Eigen::MatrixXi c(config.n_per_group, config.p);
    Eigen::MatrixXi n(config.n_per_group, config.p);
    for (int i = 0; i < config.n_per_group; ++i) {
      const double b = config.sigma_re > 0.0 ? re(rng) : 0.0;
      for (Index j = 0; j < config.p; ++j) {
        const double prob = std::clamp((*f)[j] + b, 0.0, 1.0);
        n(i, j) = 1 + depth(rng);
        c(i, j) = std::binomial_distribution<int>(n(i, j), prob)(rng);
      }
    }
    obs.counts.push_back(std::move(c));
    obs.reads.push_back(std::move(n));
  }
  return obs;
}

BinomialWeight binomial_weight(long long counts, long long reads) {
  if (reads < 0 || counts < 0) throw DataError("binomial_weight: counts and reads must be nonnegative");
  if (counts > reads) throw DataError("binomial_weight: counts exceed reads");
  BinomialWeight w;
  if (reads == 0) return w;
  const double n = static_cast<double>(reads);
  w.y_star = (static_cast<double>(counts) + 0.5) / (n + 1.0);
  w.variance = w.y_star * (1.0 - w.y_star) / n;
  w.weight = 1.0 / std::sqrt(w.variance);
  return w;
}

GroupedDataset normal_dataset(const Observations& obs, const SiteGrid& grid) {
  if (obs.groups.empty()) throw DimensionError("normal_dataset: no groups");
  const Index m = static_cast<Index>(obs.groups.size());
  GroupedDataset data;
  data.grid = grid;
  data.means.resize(m, grid.size());
  data.weights = Eigen::MatrixXd::Ones(m, grid.size());
  data.sizes.resize(m);
  for (Index g = 0; g < m; ++g) {
    const Eigen::MatrixXd& y = obs.groups[g];
    if (y.cols() != grid.size() || y.rows() == 0) throw DimensionError("normal_dataset: observation shape mismatch");
    data.means.row(g) = y.colwise().mean();
    data.sizes[g] = static_cast<double>(y.rows());
  }
  return data;
}

Observations proportions(const BinomialObservations& obs) {
  Observations out;
  for (std::size_t g = 0; g < obs.counts.size(); ++g) {
    const Eigen::MatrixXd c = obs.counts[g].cast<double>();
    const Eigen::MatrixXd n = obs.reads[g].cast<double>();
    out.groups.push_back((n.array() > 0.0).select(c.array() / n.array(), 0.0).matrix());
  }
  return out;
}

GroupedDataset binomial_dataset(const BinomialObservations& obs, const SiteGrid& grid) {
  if (obs.counts.empty() || obs.counts.size() != obs.reads.size()) {
    throw DimensionError("binomial_dataset: counts and reads must list the same groups");
  }
  const Index m = static_cast<Index>(obs.counts.size());
  const Index p = grid.size();
  GroupedDataset data;
  data.grid = grid;
  data.means = Eigen::MatrixXd::Zero(m, p);
  data.weights = Eigen::MatrixXd::Zero(m, p);
  data.sizes.resize(m);
  for (Index g = 0; g < m; ++g) {
    const Eigen::MatrixXi& c = obs.counts[g];
    const Eigen::MatrixXi& n = obs.reads[g];
    if (c.cols() != p || n.cols() != p || c.rows() != n.rows() || c.rows() == 0) {
      throw DimensionError("binomial_dataset: observation shape mismatch");
    }
    const double count = static_cast<double>(c.rows());
    data.sizes[g] = count;
    for (Index j = 0; j < p; ++j) {
      // Sum_i w_i (y_i - t)^2 = (Sum_i w_i) (ybar_w - t)^2 + const.
      double precision = 0.0;
      double weighted = 0.0;
      for (Index i = 0; i < c.rows(); ++i) {
        const BinomialWeight bw = binomial_weight(c(i, j), n(i, j));
        if (bw.weight == 0.0) continue;
        const double w = 1.0 / bw.variance;
        precision += w;
        weighted += w * static_cast<double>(c(i, j)) / static_cast<double>(n(i, j));
      }
      if (precision > 0.0) {
        data.means(g, j) = weighted / precision;
        data.weights(g, j) = std::sqrt(precision / count);
      }
    }
  }
  return data;
}

namespace {

struct WelchSite {
  double t = 0.0;
  double df = 0.0;
  bool degenerate = false;
};

WelchSite welch_site(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Index j) {
  const double n1 = static_cast<double>(a.rows());
  const double n2 = static_cast<double>(b.rows());
  const double m1 = a.col(j).mean();
  const double m2 = b.col(j).mean();
  const double v1 = (a.col(j).array() - m1).square().sum() / (n1 - 1.0);
  const double v2 = (b.col(j).array() - m2).square().sum() / (n2 - 1.0);
  const double s1 = v1 / n1;
  const double s2 = v2 / n2;
  WelchSite out;
  const double se2 = s1 + s2;
  if (!(se2 > 0.0)) {
    out.degenerate = true;
    out.t = m1 == m2 ? 0.0 : std::numeric_limits<double>::infinity();
    return out;
  }
  out.t = std::abs(m1 - m2) / std::sqrt(se2);
  out.df = se2 * se2 / (s1 * s1 / (n1 - 1.0) + s2 * s2 / (n2 - 1.0));
  return out;
}

void require_pair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() < 2 || b.rows() < 2) throw DimensionError("welch: need at least two observations per group");
  if (a.cols() != b.cols()) throw DimensionError("welch: groups cover different sites");
}

}  // namespace

Eigen::VectorXd welch_t_scores(const Eigen::MatrixXd& group1, const Eigen::MatrixXd& group2) {
  require_pair(group1, group2);
  Eigen::VectorXd t(group1.cols());
  for (Index j = 0; j < group1.cols(); ++j) t[j] = welch_site(group1, group2, j).t;
  return t;
}

std::vector<double> welch_p_values(const Eigen::MatrixXd& group1, const Eigen::MatrixXd& group2) {
  require_pair(group1, group2);
  std::vector<double> out(group1.cols());
  for (Index j = 0; j < group1.cols(); ++j) {
    const WelchSite s = welch_site(group1, group2, j);
    if (s.degenerate) {
      out[j] = s.t == 0.0 ? 1.0 : 0.0;
      continue;
    }
    const boost::math::students_t dist(s.df);
    out[j] = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, s.t)));
  }
  return out;
}

Observations smooth_observations(const Observations& obs, const SiteGrid& grid, int lambda_count,
                                 const SolverOptions& options) {
  constexpr int kOrder = 2;
  if (lambda_count < 1) throw ParameterError("smooth_observations: lambda_count must be >= 1");
  const Index p = grid.size();
  Observations out;
  for (const Eigen::MatrixXd& y : obs.groups) {
    if (y.cols() != p) throw DimensionError("smooth_observations: observation shape mismatch");
    Eigen::MatrixXd smoothed(y.rows(), p);
    for (Index i = 0; i < y.rows(); ++i) {
      GroupedDataset single;
      single.grid = grid;
      single.means = y.row(i);
      single.weights = Eigen::MatrixXd::Ones(1, p);
      single.sizes = Eigen::VectorXd::Ones(1);
      const std::vector<double> lambdas = lambda_grid(single, kOrder, lambda_count);

      JadeSolver solver(single, kOrder, options);
      AdmmState state = solver.initial_state(lambdas.back());
      double best = std::numeric_limits<double>::infinity();
      for (auto it = lambdas.rbegin(); it != lambdas.rend(); ++it) {
        const JadeFit fit = solver.run({*it, 0.0, kOrder, 0.0}, state);
        state = fit.state;
        const Eigen::VectorXd alpha = fit.state.alpha.row(0).transpose();
        const double scale = 1.0 + alpha.cwiseAbs().maxCoeff();
        Index jumps = 0;
        for (Index j = 0; j + 1 < alpha.size(); ++j)
          if (std::abs(alpha[j + 1] - alpha[j]) > 1e-8 * scale) ++jumps;
        const double df = static_cast<double>(jumps + kOrder + 1);
        if (df >= static_cast<double>(p)) continue;
        const double rss = (y.row(i) - fit.theta.row(0)).squaredNorm();
        const double shrink = 1.0 - df / static_cast<double>(p);
        const double gcv = rss / static_cast<double>(p) / (shrink * shrink);
        if (gcv < best) {
          best = gcv;
          smoothed.row(i) = fit.theta.row(0);
        }
      }
      if (!std::isfinite(best)) smoothed.row(i) = y.row(i);
    }
    out.groups.push_back(std::move(smoothed));
  }
  return out;
}

Eigen::VectorXd t_test_scores(const Observations& obs, const SiteGrid& grid, Smoothing smoothing) {
  if (obs.groups.size() != 2) throw DimensionError("t_test_scores: exactly two groups required");
  if (smoothing == Smoothing::None) return welch_t_scores(obs.groups[0], obs.groups[1]);
  const Observations s = smooth_observations(obs, grid);
  return welch_t_scores(s.groups[0], s.groups[1]);
}

}  // namespace jade
