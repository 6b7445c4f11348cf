#include "jade/regions.hpp"

#include <algorithm>
#include <numeric>

namespace jade {

std::string SitePartition::signature() const {
  const std::size_t m = block_of.size();
  std::string out;
  for (int b = 0; b < blocks; ++b) {
    if (b > 0) out += '|';
    bool first = true;
    for (std::size_t g = 0; g < m; ++g) {
      if (block_of[g] != b) continue;
      if (!first && m > 9) out += ',';
      out += std::to_string(g + 1);
      first = false;
    }
  }
  return out;
}

SitePartition partition_at_site(const Eigen::VectorXd& column, double eps, Index site) {
  if (!(eps > 0.0)) throw ParameterError("partition_at_site: epsilon must be positive");
  const Index m = column.size();
  SitePartition part;
  part.site = site;

  // Union-find over the fused relation.
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::vector<bool>> fused(m, std::vector<bool>(m, false));
  for (Index a = 0; a < m; ++a) {
    for (Index b = a + 1; b < m; ++b) {
      if (std::abs(column[a] - column[b]) < eps) {
        fused[a][b] = fused[b][a] = true;
        parent[find(static_cast<int>(a))] = find(static_cast<int>(b));
      }
    }
  }
  part.block_of.assign(m, -1);
  std::vector<int> label_of_root(m, -1);
  for (Index g = 0; g < m; ++g) {
    const int root = find(static_cast<int>(g));
    if (label_of_root[root] < 0) label_of_root[root] = part.blocks++;
    part.block_of[g] = label_of_root[root];
  }
  for (Index a = 0; a < m && part.valid; ++a)
    for (Index b = a + 1; b < m; ++b)
      if (part.block_of[a] == part.block_of[b] && !fused[a][b]) {
        part.valid = false;
        break;
      }
  return part;
}

std::vector<SitePartition> site_partitions(const Eigen::MatrixXd& profiles, double eps) {
  std::vector<SitePartition> out;
  out.reserve(profiles.cols());
  for (Index j = 0; j < profiles.cols(); ++j) out.push_back(partition_at_site(profiles.col(j), eps, j));
  return out;
}

std::vector<SubRegion> subregions(const Region& region, const std::vector<SitePartition>& partitions) {
  std::vector<SubRegion> out;
  for (Index j = region.start; j <= region.end; ++j) {
    const SitePartition& part = partitions.at(j);
    if (!out.empty() && (part.fully_fused() || part.same_grouping(out.back().partition))) {
      out.back().end = j;
      continue;
    }
    out.push_back(SubRegion{j, j, part});
  }
  return out;
}

RegionSet extract_regions(const Eigen::MatrixXd& beta, const SiteGrid& grid, double eps, int merge_gap) {
  if (beta.cols() != grid.size()) throw DimensionError("extract_regions: profiles do not match the grid");
  if (merge_gap < 0) throw ParameterError("extract_regions: merge gap must be >= 0");
  const std::vector<SitePartition> parts = site_partitions(beta, eps);
  const Index p = beta.cols();
  RegionSet out;

  for (Index j = 0; j < p;) {
    if (parts[j].valid) {
      ++j;
      continue;
    }
    const Index first = j;
    while (j < p && !parts[j].valid) out.invalid_sites.push_back(j++);
    ++out.invalid_runs;
    out.invalid_span += grid[j - 1] - grid[first] + 1.0;
  }

  std::vector<std::pair<Index, Index>> runs;
  for (Index j = 0; j < p;) {
    if (!parts[j].differential()) {
      ++j;
      continue;
    }
    const Index first = j;
    while (j < p && parts[j].differential()) ++j;
    runs.emplace_back(first, j - 1);
  }

  std::vector<std::pair<Index, Index>> merged;
  for (const auto& run : runs) {
    if (!merged.empty()) {
      const Index gap_first = merged.back().second + 1;
      const Index gap = run.first - gap_first;
      bool joinable = gap <= merge_gap;
      for (Index g = gap_first; joinable && g < run.first; ++g) joinable = parts[g].fully_fused();
      if (joinable) {
        merged.back().second = run.second;
        continue;
      }
    }
    merged.push_back(run);
  }

  for (const auto& [first, last] : merged) {
    Region r;
    r.start = first;
    r.end = last;
    r.start_position = grid[first];
    r.end_position = grid[last];
    r.subregions = subregions(r, parts);
    out.regions.push_back(std::move(r));
  }
  return out;
}

RegionSet extract_regions(const JadeFit& fit, const SiteGrid& grid, double eps, int merge_gap) {
  if (!fit.converged) throw ParameterError("extract_regions: fit did not converge");
  return extract_regions(fit.beta, grid, eps, merge_gap);
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Gain:
      return "gain";
    case Direction::Loss:
      return "loss";
    default:
      return "other";
  }
}

Direction classify_direction(const SubRegion& sub, const Eigen::MatrixXd& theta, const std::vector<int>& order,
                             double tol) {
  const Index m = theta.rows();
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  bool permutation = static_cast<Index>(sorted.size()) == m;
  for (std::size_t i = 0; permutation && i < sorted.size(); ++i) permutation = sorted[i] == static_cast<int>(i);
  if (!permutation) throw ParameterError("classify_direction: order must be a permutation of the groups");
  if (sub.start < 0 || sub.end >= theta.cols() || sub.start > sub.end) {
    throw DimensionError("classify_direction: sub-region outside the profiles");
  }

  bool gain = true;
  bool loss = true;
  for (Index j = sub.start; j <= sub.end; ++j) {
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const double step = theta(order[i + 1], j) - theta(order[i], j);
      if (step < -tol) gain = false;
      if (step > tol) loss = false;
    }
  }
  if (gain && !loss) return Direction::Gain;
  if (loss && !gain) return Direction::Loss;
  return Direction::Other;
}

}  // namespace jade
