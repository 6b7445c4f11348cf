#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "jade/admm.hpp"
#include "jade/regions.hpp"

namespace jade {

struct CountRow {
  std::string chrom;
  long long pos = 0;  // 1-based
  std::string group;
  std::string rep;
  long long reads = 0;
  long long count = 0;
};

struct CountTable {
  std::vector<CountRow> rows;  // sorted by (chrom, pos, group, rep)
  std::vector<std::string> warnings;
};

/// Tab-separated with header `chrom pos group rep reads count`. Errors name
/// the source and 1-based line number. Rows are sorted on load.
CountTable read_counts(std::istream& in, const std::string& source = "<stream>");
CountTable ingest_counts(const std::filesystem::path& path);
void write_counts(std::ostream& out, const CountTable& table);

using CountMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

/// Replicates summed within group. Columns are the chromosome's sites in
/// position order; a (group, site) pair with no row has zero reads.
struct PooledChrom {
  std::string chrom;
  std::vector<long long> positions;
  CountMatrix reads;   // groups x sites
  CountMatrix counts;  // groups x sites
};

struct PooledTable {
  std::vector<std::string> groups;
  std::vector<PooledChrom> chroms;  // sorted by name
};

/// `group_order` fixes the row order of groups (and must list every label
/// present); empty means lexicographic order.
PooledTable pool_replicates(const CountTable& table, const std::vector<std::string>& group_order = {});

/// Proportions c/n with weights 1/sd from binomial_weight and N_m = 1.
GroupedDataset pooled_dataset(const PooledChrom& chrom, Index first, Index last);

struct SiteRange {
  Index first = 0;  // inclusive site indices
  Index last = 0;
  Index size() const { return last - first + 1; }
};

/// Splits at gaps >= max_gap, trims leading and trailing sites not covered in
/// every group, then drops ranges with fewer than min_sites sites.
std::vector<SiteRange> segment_sites(const std::vector<long long>& positions, const std::vector<bool>& covered,
                                     long long max_gap = 2000, Index min_sites = 20);

struct Segment {
  std::string chrom;
  SiteRange range;
  std::vector<long long> positions;
  GroupedDataset data;
};

std::vector<Segment> make_segments(const PooledTable& pooled, long long max_gap = 2000, Index min_sites = 20);

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  int k = 2;
  int folds = 5;
  double epsilon = 0.005;
  long long max_gap = 2000;
  Index min_sites = 20;
  unsigned workers = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 0;
  std::vector<std::string> group_order;
  int lambda_count = 30;
  int gamma_count = 100;
  SolverOptions options;
};

struct SegmentResult {
  Segment segment;
  bool solved = false;
  bool converged = false;
  std::string error;
  double lambda = 0.0;
  double gamma = 0.0;
  int iterations = 0;
  JadeFit fit;
  RegionSet regions;
  std::vector<Direction> directions;  // one per region
  std::vector<std::string> warnings;
};

struct PipelineResult {
  std::vector<std::string> groups;
  std::vector<SegmentResult> segments;
  std::vector<std::string> warnings;

  bool all_converged() const;
};

/// Stage-1 lambda CV, stage-2 gamma CV, final fit and region extraction for
/// one segment. Failures are recorded on the result, never thrown.
SegmentResult solve_segment(const Segment& segment, const PipelineConfig& config);

/// Solves segments on a bounded worker pool; results keep segment order.
std::vector<SegmentResult> solve_segments(const std::vector<Segment>& segments, const PipelineConfig& config);

/// Checks the output directory is writable, then ingests, pools, segments and
/// solves. Throws IoError before solving when outputs cannot be written.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Region direction: the common label of its sub-regions, else Other.
Direction region_direction(const Region& region, const Eigen::MatrixXd& theta, double tol);

void write_bed(std::ostream& out, const PipelineResult& result);
void write_profiles(std::ostream& out, const PipelineResult& result, double epsilon);
void write_manifest(std::ostream& out, const PipelineResult& result, const PipelineConfig& config);

/// regions.bed, profiles.tsv and manifest.json under config.out_dir.
void write_outputs(const PipelineResult& result, const PipelineConfig& config);

/// Creates the directory if needed and probes that files can be created in it.
void ensure_writable(const std::filesystem::path& dir);

}  // namespace jade
