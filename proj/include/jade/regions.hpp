#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "jade/admm.hpp"

namespace jade {

/// Grouping of the M profiles at one site into blocks of mutually fused values.
struct SitePartition {
  Index site = 0;
  std::vector<int> block_of;  // canonical labels: block ids in order of first appearance
  int blocks = 0;
  bool valid = true;  // false when the fused relation is not transitive

  bool fully_fused() const { return valid && blocks == 1; }
  bool differential() const { return valid && blocks >= 2; }

  /// Blocks joined by '|', 1-based group numbers inside a block, e.g. "1|23".
  /// Group numbers are comma-separated when M > 9.
  std::string signature() const;

  bool same_grouping(const SitePartition& other) const {
    return valid == other.valid && block_of == other.block_of;
  }
};

struct SubRegion {
  Index start = 0;  // site indices, inclusive
  Index end = 0;
  SitePartition partition;
};

struct Region {
  Index start = 0;  // site indices, inclusive
  Index end = 0;
  double start_position = 0.0;
  double end_position = 0.0;
  std::vector<SubRegion> subregions;
};

struct RegionSet {
  std::vector<Region> regions;
  std::vector<Index> invalid_sites;
  int invalid_runs = 0;
  double invalid_span = 0.0;  // sum over invalid runs of (last - first position + 1)
};

/// Connected components of |b_m - b_m'| < eps. For M = 3, exactly two fused
/// pairs out of three marks the site invalid (in general: any two members of
/// one component that are not directly fused).
SitePartition partition_at_site(const Eigen::VectorXd& column, double eps, Index site = 0);

std::vector<SitePartition> site_partitions(const Eigen::MatrixXd& profiles, double eps);

/// Differential regions from fused-profile estimates: maximal runs of valid
/// sites with at least two blocks, runs separated by at most `merge_gap` fully
/// fused sites joined. Invalid sites never belong to a region and are
/// reported on their own.
RegionSet extract_regions(const Eigen::MatrixXd& beta, const SiteGrid& grid, double eps, int merge_gap = 1);

/// Same, reading fusion from `fit.beta`. Throws ParameterError on an
/// unconverged fit.
RegionSet extract_regions(const JadeFit& fit, const SiteGrid& grid, double eps, int merge_gap = 1);

/// Maximal runs of one partition inside a region. A fused gap site joined by
/// merging belongs to the sub-region before it.
std::vector<SubRegion> subregions(const Region& region, const std::vector<SitePartition>& partitions);

enum class Direction { Gain, Loss, Other };

const char* to_string(Direction d);

/// Gain when profiles are non-decreasing along `order` at every site of the
/// sub-region, loss when non-increasing, other otherwise. `order` lists
/// 0-based group indices from earliest to latest; `tol` absorbs solver noise.
Direction classify_direction(const SubRegion& sub, const Eigen::MatrixXd& theta, const std::vector<int>& order,
                             double tol = 0.0);

}  // namespace jade
