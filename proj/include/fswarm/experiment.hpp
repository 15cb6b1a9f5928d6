#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fswarm/swarm.hpp"

namespace fswarm {

/// A scenario: one configuration replicated over derived seeds.
struct ExperimentSpec {
  std::string scenario = "custom";
  SimConfig config;
  std::uint64_t master_seed = 1;
  std::size_t replicates = 1;
  /// Empty: keep results in memory only.
  std::filesystem::path out_dir;
};

/// Seed for replicate `index` of `scenario`; a pure function of its arguments.
std::uint64_t run_seed(std::uint64_t master_seed, const std::string& scenario, std::size_t replicate);

struct RunSummary {
  std::string scenario;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  Verdict verdict = Verdict::stable;
  std::optional<std::uint64_t> divergence_slot;
  std::size_t final_population = 0;
  /// Over the last 25% of recorded slots.
  double mean_drift = 0.0;
  double growth_slope = 0.0;

  bool operator==(const RunSummary&) const = default;
};

/// Summary statistics from a metrics series; `threshold` decides the verdict.
RunSummary summarize(const std::vector<MetricsRecord>& series, std::size_t threshold);

std::string to_json_line(const RunSummary& s);

/// CSV: '#' preamble (config, field modulus, M convention), the column
/// header, one row per slot, then '#' lines for controller events.
void write_csv(std::ostream& os, const ExperimentSpec& spec, std::size_t replicate, const SimConfig& cfg,
               const RunResult& result);

/// Recomputes a run's summary from its CSV alone. Throws std::runtime_error on malformed input.
RunSummary summarize_csv(std::istream& is);

std::string csv_header(std::size_t k);

struct MatrixRun {
  SimConfig config;
  RunResult result;
  RunSummary summary;
};

/// Runs every replicate (in parallel when threads > 1). When spec.out_dir is
/// set, writes <scenario>_r<NNN>.csv per run and appends to summary.jsonl.
/// Throws std::runtime_error if the output directory is unusable.
std::vector<MatrixRun> run_matrix(const ExperimentSpec& spec, unsigned threads = 1, bool keep_series = true);

struct BoundaryCell {
  std::size_t k = 0;
  double lambda = 0.0;
  std::size_t runs = 0;
  std::size_t stable = 0;
  std::vector<RunSummary> summaries;

  [[nodiscard]] double stable_fraction() const { return runs ? static_cast<double>(stable) / static_cast<double>(runs) : 0.0; }
};

/// Empirical stability fraction over a (k, lambda) grid. `base` supplies the
/// policy and horizon.
std::vector<BoundaryCell> sweep_boundary(const SimConfig& base, const std::vector<std::size_t>& k_values,
                                         const std::vector<double>& lambda_grid, std::size_t replicates,
                                         std::uint64_t master_seed, unsigned threads = 1,
                                         const std::filesystem::path& out_dir = {});

/// Smallest lambda in the grid whose stable fraction drops below one half; nullopt if none.
std::optional<double> boundary_lambda(const std::vector<BoundaryCell>& cells, std::size_t k);

/// Flat `key = value` text with '#' comments.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

/// Applies recognised keys; throws ConfigError on unknown keys or bad values.
void apply_config(ExperimentSpec& spec, const std::map<std::string, std::string>& kv);

/// fig3, fig4, fig4_fountain, fig5, fig6, adaptive. Throws ConfigError for other names.
ExperimentSpec builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

}  // namespace fswarm
