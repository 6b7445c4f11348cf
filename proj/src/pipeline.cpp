#include "jade/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "jade/error.hpp"
#include "jade/simbench.hpp"
#include "jade/tuning.hpp"
#include "jade/version.hpp"

namespace jade {

namespace {

const std::vector<std::string> kColumns = {"chrom", "pos", "group", "rep", "reads", "count"};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

[[noreturn]] void fail_line(const std::string& source, std::size_t line, const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

long long parse_integer(const std::string& field, const char* name, const std::string& source, std::size_t line) {
  long long v = 0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty()) {
    fail_line(source, line, std::string("field '") + name + "' is not an integer: '" + field + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

bool row_less(const CountRow& a, const CountRow& b) {
  return std::tie(a.chrom, a.pos, a.group, a.rep) < std::tie(b.chrom, b.pos, b.group, b.rep);
}

bool same_key(const CountRow& a, const CountRow& b) {
  return a.chrom == b.chrom && a.pos == b.pos && a.group == b.group && a.rep == b.rep;
}

}  // namespace

CountTable read_counts(std::istream& in, const std::string& source) {
  CountTable table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<int> column_of(kColumns.size(), -1);
  bool have_header = false;
  std::vector<std::size_t> line_of;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (!have_header) {
      if (fields.size() != kColumns.size()) fail_line(source, lineno, "header must have 6 tab-separated columns");
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        const auto it = std::find(fields.begin(), fields.end(), kColumns[c]);
        if (it == fields.end()) fail_line(source, lineno, "header is missing column '" + kColumns[c] + "'");
        column_of[c] = static_cast<int>(it - fields.begin());
      }
      have_header = true;
      continue;
    }
    if (fields.size() != kColumns.size()) {
      fail_line(source, lineno, "expected 6 fields, found " + std::to_string(fields.size()));
    }
    CountRow row;
    row.chrom = fields[column_of[0]];
    row.pos = parse_integer(fields[column_of[1]], "pos", source, lineno);
    row.group = fields[column_of[2]];
    row.rep = fields[column_of[3]];
    row.reads = parse_integer(fields[column_of[4]], "reads", source, lineno);
    row.count = parse_integer(fields[column_of[5]], "count", source, lineno);
    if (row.chrom.empty() || row.group.empty() || row.rep.empty()) fail_line(source, lineno, "empty label field");
    if (row.pos < 1) fail_line(source, lineno, "position must be >= 1");
    if (row.reads < 0 || row.count < 0) fail_line(source, lineno, "reads and count must be nonnegative");
    if (row.count > row.reads) {
      fail_line(source, lineno,
                "count " + std::to_string(row.count) + " exceeds reads " + std::to_string(row.reads));
    }
    table.rows.push_back(std::move(row));
    line_of.push_back(lineno);
  }
  if (!have_header) {
    table.warnings.push_back(source + ": empty input");
    return table;
  }
  if (table.rows.empty()) table.warnings.push_back(source + ": no data rows");

  std::vector<std::size_t> order(table.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row_less(table.rows[a], table.rows[b]); });
  std::vector<CountRow> sorted;
  sorted.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && same_key(table.rows[order[i]], table.rows[order[i - 1]])) {
      fail_line(source, std::max(line_of[order[i]], line_of[order[i - 1]]),
                "duplicate row for (chrom, pos, group, rep); first seen on line " +
                    std::to_string(std::min(line_of[order[i]], line_of[order[i - 1]])));
    }
    sorted.push_back(table.rows[order[i]]);
  }
  table.rows = std::move(sorted);
  return table;
}

CountTable ingest_counts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path.string());
  return read_counts(in, path.string());
}

void write_counts(std::ostream& out, const CountTable& table) {
  out << "chrom\tpos\tgroup\trep\treads\tcount\n";
  for (const CountRow& r : table.rows) {
    out << r.chrom << '\t' << r.pos << '\t' << r.group << '\t' << r.rep << '\t' << r.reads << '\t' << r.count << '\n';
  }
}

PooledTable pool_replicates(const CountTable& table, const std::vector<std::string>& group_order) {
  std::set<std::string> labels;
  for (const CountRow& r : table.rows) labels.insert(r.group);
  PooledTable pooled;
  if (group_order.empty()) {
    pooled.groups.assign(labels.begin(), labels.end());
  } else {
    std::set<std::string> given(group_order.begin(), group_order.end());
    if (given.size() != group_order.size()) throw ParameterError("group order lists a label twice");
    for (const auto& l : labels)
      if (!given.count(l)) throw ParameterError("group order does not list group '" + l + "'");
    pooled.groups = group_order;
  }
  std::map<std::string, Index> group_index;
  for (std::size_t g = 0; g < pooled.groups.size(); ++g) group_index[pooled.groups[g]] = static_cast<Index>(g);
  const Index m = static_cast<Index>(pooled.groups.size());

  // Rows are sorted by (chrom, pos), so each chromosome is one contiguous block.
  for (std::size_t i = 0; i < table.rows.size();) {
    const std::string& chrom = table.rows[i].chrom;
    std::size_t end = i;
    std::vector<long long> positions;
    while (end < table.rows.size() && table.rows[end].chrom == chrom) {
      if (positions.empty() || positions.back() != table.rows[end].pos) positions.push_back(table.rows[end].pos);
      ++end;
    }
    PooledChrom pc;
    pc.chrom = chrom;
    pc.positions = positions;
    pc.reads = CountMatrix::Zero(m, static_cast<Index>(positions.size()));
    pc.counts = CountMatrix::Zero(m, static_cast<Index>(positions.size()));
    Index site = -1;
    long long last_pos = -1;
    for (std::size_t r = i; r < end; ++r) {
      const CountRow& row = table.rows[r];
      if (row.pos != last_pos) {
        ++site;
        last_pos = row.pos;
      }
      const Index g = group_index.at(row.group);
      pc.reads(g, site) += row.reads;
      pc.counts(g, site) += row.count;
    }
    pooled.chroms.push_back(std::move(pc));
    i = end;
  }
  return pooled;
}

GroupedDataset pooled_dataset(const PooledChrom& chrom, Index first, Index last) {
  if (first < 0 || last >= static_cast<Index>(chrom.positions.size()) || first > last) {
    throw DimensionError("pooled_dataset: site range outside the chromosome");
  }
  const Index m = chrom.reads.rows();
  const Index p = last - first + 1;
  Eigen::VectorXd pos(p);
  for (Index j = 0; j < p; ++j) pos[j] = static_cast<double>(chrom.positions[first + j]);
  GroupedDataset data;
  data.grid = SiteGrid(pos);
  data.means = Eigen::MatrixXd::Zero(m, p);
  data.weights = Eigen::MatrixXd::Zero(m, p);
  data.sizes = Eigen::VectorXd::Ones(m);
  for (Index g = 0; g < m; ++g) {
    for (Index j = 0; j < p; ++j) {
      const long long n = chrom.reads(g, first + j);
      const long long c = chrom.counts(g, first + j);
      const BinomialWeight w = binomial_weight(c, n);
      if (n > 0) data.means(g, j) = static_cast<double>(c) / static_cast<double>(n);
      data.weights(g, j) = w.weight;
    }
  }
  return data;
}

std::vector<SiteRange> segment_sites(const std::vector<long long>& positions, const std::vector<bool>& covered,
                                     long long max_gap, Index min_sites) {
  if (positions.size() != covered.size()) throw DimensionError("segment_sites: coverage length mismatch");
  if (max_gap < 1) throw ParameterError("segment_sites: max_gap must be >= 1");
  const Index n = static_cast<Index>(positions.size());
  for (Index j = 1; j < n; ++j) {
    if (positions[j] <= positions[j - 1]) throw DataError("segment_sites: positions must be strictly increasing");
  }
  std::vector<SiteRange> out;
  for (Index j = 0; j < n;) {
    Index end = j;
    while (end + 1 < n && positions[end + 1] - positions[end] < max_gap) ++end;
    Index first = j;
    Index last = end;
    while (first <= last && !covered[first]) ++first;
    while (last >= first && !covered[last]) --last;
    if (first <= last && last - first + 1 >= min_sites) out.push_back({first, last});
    j = end + 1;
  }
  return out;
}

std::vector<Segment> make_segments(const PooledTable& pooled, long long max_gap, Index min_sites) {
  std::vector<Segment> out;
  for (const PooledChrom& pc : pooled.chroms) {
    std::vector<bool> covered(pc.positions.size());
    for (std::size_t j = 0; j < covered.size(); ++j) covered[j] = (pc.reads.col(static_cast<Index>(j)).array() > 0).all();
    for (const SiteRange& r : segment_sites(pc.positions, covered, max_gap, min_sites)) {
      Segment s;
      s.chrom = pc.chrom;
      s.range = r;
      s.positions.assign(pc.positions.begin() + r.first, pc.positions.begin() + r.last + 1);
      s.data = pooled_dataset(pc, r.first, r.last);
      out.push_back(std::move(s));
    }
  }
  return out;
}

bool PipelineResult::all_converged() const {
  return std::all_of(segments.begin(), segments.end(), [](const SegmentResult& s) { return s.converged; });
}

Direction region_direction(const Region& region, const Eigen::MatrixXd& theta, double tol) {
  std::vector<int> order(theta.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::optional<Direction> common;
  for (const SubRegion& sub : region.subregions) {
    const Direction d = classify_direction(sub, theta, order, tol);
    if (common && *common != d) return Direction::Other;
    common = d;
  }
  return common.value_or(Direction::Other);
}

SegmentResult solve_segment(const Segment& segment, const PipelineConfig& config) {
  SegmentResult r;
  r.segment = segment;
  try {
    const GroupedDataset& data = segment.data;
    const FoldPlan plan = make_folds(data.sites(), data.groups(), config.folds);
    const CvCurve lambda_cv =
        cv_lambda(data, lambda_grid(data, config.k, config.lambda_count), plan, config.k, config.options);
    r.warnings.insert(r.warnings.end(), lambda_cv.warnings.begin(), lambda_cv.warnings.end());
    r.lambda = lambda_cv.selected;

    const GammaGrid gg = gamma_grid(data, r.lambda, config.k, config.gamma_count, config.options);
    r.warnings.insert(r.warnings.end(), gg.warnings.begin(), gg.warnings.end());
    const CvCurve gamma_cv = cv_gamma(data, r.lambda, gg.values, plan, config.k, config.options);
    r.warnings.insert(r.warnings.end(), gamma_cv.warnings.begin(), gamma_cv.warnings.end());
    r.gamma = gamma_cv.selected;

    r.fit = solve_jade(data, {r.lambda, r.gamma, config.k, config.epsilon}, config.options);
    r.solved = true;
    r.converged = r.fit.converged;
    r.iterations = r.fit.iterations;
    if (r.converged) {
      r.regions = extract_regions(r.fit.beta, data.grid, config.epsilon);
      for (const Region& region : r.regions.regions) {
        r.directions.push_back(region_direction(region, r.fit.theta, config.epsilon));
      }
    } else {
      r.error = "did not converge in " + std::to_string(r.iterations) + " iterations";
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

std::vector<SegmentResult> solve_segments(const std::vector<Segment>& segments, const PipelineConfig& config) {
  std::vector<SegmentResult> results(segments.size());
  if (segments.empty()) return results;
  unsigned workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.workers;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(segments.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < segments.size(); i = next++) results[i] = solve_segment(segments[i], config);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return results;
}

void ensure_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::filesystem::path probe = dir / ".jade-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw IoError("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  if (config.out_dir.empty()) throw ParameterError("run_pipeline: output directory is required");
  ensure_writable(config.out_dir);
  const CountTable table = ingest_counts(config.input);
  const PooledTable pooled = pool_replicates(table, config.group_order);
  PipelineResult result;
  result.groups = pooled.groups;
  result.warnings = table.warnings;
  if (!table.rows.empty() && pooled.groups.size() < 2) throw DataError("run_pipeline: need at least two groups");
  const std::vector<Segment> segments = make_segments(pooled, config.max_gap, config.min_sites);
  if (segments.empty() && !table.rows.empty()) result.warnings.push_back("no segment passed the filters");
  result.segments = solve_segments(segments, config);
  return result;
}

void write_bed(std::ostream& out, const PipelineResult& result) {
  out << "#chrom\tstart\tend\tname\tsubregions\tdirection\n";
  for (const SegmentResult& s : result.segments) {
    if (!s.converged) continue;
    for (std::size_t i = 0; i < s.regions.regions.size(); ++i) {
      const Region& region = s.regions.regions[i];
      std::string name;
      for (const SubRegion& sub : region.subregions) {
        if (!name.empty()) name += ';';
        name += sub.partition.signature();
      }
      out << s.segment.chrom << '\t' << s.segment.positions[region.start] - 1 << '\t'
          << s.segment.positions[region.end] << '\t' << name << '\t' << region.subregions.size() << '\t'
          << to_string(s.directions[i]) << '\n';
    }
  }
}

void write_profiles(std::ostream& out, const PipelineResult& result, double epsilon) {
  const std::size_t m = result.groups.size();
  out << "chrom\tpos";
  for (const auto& g : result.groups) out << "\ttheta_" << g;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) out << "\tfused_" << result.groups[a] << '_' << result.groups[b];
  out << '\n';
  for (const SegmentResult& s : result.segments) {
    if (!s.converged) continue;
    for (std::size_t j = 0; j < s.segment.positions.size(); ++j) {
      const Index col = static_cast<Index>(j);
      out << s.segment.chrom << '\t' << s.segment.positions[j];
      for (std::size_t g = 0; g < m; ++g) out << '\t' << format_double(s.fit.theta(static_cast<Index>(g), col));
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
          const double sep = std::abs(s.fit.beta(static_cast<Index>(a), col) - s.fit.beta(static_cast<Index>(b), col));
          out << '\t' << (sep < epsilon ? 1 : 0);
        }
      }
      out << '\n';
    }
  }
}

void write_manifest(std::ostream& out, const PipelineResult& result, const PipelineConfig& config) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["software"] = {{"name", "jade"}, {"version", kVersion}};
  j["input"] = config.input.string();
  j["parameters"] = {{"k", config.k},
                     {"folds", config.folds},
                     {"epsilon", config.epsilon},
                     {"max_gap", config.max_gap},
                     {"min_sites", config.min_sites},
                     {"seed", config.seed},
                     {"lambda_count", config.lambda_count},
                     {"gamma_count", config.gamma_count},
                     {"tol_abs", config.options.tol.abs},
                     {"tol_rel", config.options.tol.rel},
                     {"max_iterations", config.options.max_iterations}};
  j["groups"] = result.groups;
  j["warnings"] = result.warnings;
  ordered_json segs = ordered_json::array();
  std::size_t converged = 0;
  std::size_t regions = 0;
  for (const SegmentResult& s : result.segments) {
    ordered_json e;
    e["chrom"] = s.segment.chrom;
    e["start"] = s.segment.positions.front();
    e["end"] = s.segment.positions.back();
    e["sites"] = s.segment.positions.size();
    e["lambda"] = s.lambda;
    e["gamma"] = s.gamma;
    e["converged"] = s.converged;
    e["iterations"] = s.iterations;
    e["regions"] = s.converged ? s.regions.regions.size() : 0;
    e["invalid_sites"] = s.regions.invalid_sites.size();
    e["invalid_runs"] = s.regions.invalid_runs;
    e["error"] = s.error;
    e["warnings"] = s.warnings;
    segs.push_back(std::move(e));
    if (s.converged) {
      ++converged;
      regions += s.regions.regions.size();
    }
  }
  j["segments"] = std::move(segs);
  j["summary"] = {{"segments", result.segments.size()},
                  {"converged", converged},
                  {"failed", result.segments.size() - converged},
                  {"regions", regions}};
  out << j.dump(2) << '\n';
}

void write_outputs(const PipelineResult& result, const PipelineConfig& config) {
  ensure_writable(config.out_dir);
  auto open = [&](const char* name) {
    std::ofstream f(config.out_dir / name);
    if (!f) throw IoError("cannot write " + (config.out_dir / name).string());
    return f;
  };
  {
    std::ofstream f = open("regions.bed");
    write_bed(f, result);
  }
  {
    std::ofstream f = open("profiles.tsv");
    write_profiles(f, result, config.epsilon);
  }
  {
    std::ofstream f = open("manifest.json");
    write_manifest(f, result, config);
  }
}

}  // namespace jade
