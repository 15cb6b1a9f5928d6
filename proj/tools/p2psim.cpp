// p2psim: batch driver for the swarm simulator.
//
//   p2psim --scenario fig5 --out results/          builtin scenario, 10 replicates
//   p2psim --policy baseline --lambda 2 --k 5 --out results/
//   p2psim --config exp.cfg --seed 7               file values, flags override
//   p2psim sweep --k 3,5 --lambda 2,3,4,6 --out results/
//   p2psim summarize results/fig5_r000.csv

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fswarm/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct RunFlags {
  std::string config_file;
  std::string scenario;
  std::optional<std::string> policy;
  std::optional<double> lambda;
  std::optional<std::size_t> k;
  std::optional<std::size_t> pool;
  std::optional<std::size_t> max_arrivals;
  std::optional<std::uint64_t> slots;
  std::optional<std::size_t> threshold;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> tau;
  std::optional<std::uint64_t> ramp_slot;
  std::optional<double> ramp_lambda;
  std::optional<std::size_t> file_len;
  std::string out;
  unsigned threads = 1;
};

void prepare_out_dir(const std::filesystem::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
  std::filesystem::remove(dir / "summary.jsonl", ec);
}

fswarm::ExperimentSpec build_spec(const RunFlags& f) {
  using namespace fswarm;
  ExperimentSpec spec;
  const auto names = builtin_scenario_names();
  if (!f.scenario.empty() && std::find(names.begin(), names.end(), f.scenario) != names.end())
    spec = builtin_scenario(f.scenario);
  else if (!f.scenario.empty())
    spec.scenario = f.scenario;

  if (!f.config_file.empty()) apply_config(spec, load_config_file(f.config_file));

  std::map<std::string, std::string> kv;
  auto put = [&kv](const char* key, const auto& v) {
    if (v) {
      std::ostringstream os;
      os.precision(17);
      os << *v;
      kv[key] = os.str();
    }
  };
  put("policy", f.policy);
  put("lambda", f.lambda);
  put("k", f.k);
  put("K", f.pool);
  put("A", f.max_arrivals);
  put("slots", f.slots);
  put("threshold", f.threshold);
  put("seed", f.seed);
  put("replicates", f.replicates);
  put("tau", f.tau);
  put("ramp_slot", f.ramp_slot);
  put("ramp_lambda", f.ramp_lambda);
  put("file_len", f.file_len);
  if (!f.out.empty()) kv["out"] = f.out;
  apply_config(spec, kv);
  spec.config.validate();
  return spec;
}

void print_summary(const std::vector<fswarm::MatrixRun>& runs) {
  for (const auto& r : runs) std::cout << fswarm::to_json_line(r.summary) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slotted peer-to-peer swarm simulator with a random linear fountain code"};

  RunFlags f;
  app.add_option("--config", f.config_file, "key = value config file; flags override it")->check(CLI::ExistingFile);
  app.add_option("--scenario", f.scenario, "builtin scenario (fig3 fig4 fig4_fountain fig5 fig6 adaptive) or a tag");
  app.add_option("--policy", f.policy, "baseline | fountain-only | prioritize-only | proposed");
  app.add_option("--lambda", f.lambda, "mean arrivals per slot (>= 1)");
  app.add_option("--k", f.k, "number of source chunks");
  app.add_option("--K", f.pool, "server coefficient pool size (0 = fresh draws)");
  app.add_option("--A", f.max_arrivals, "max arrivals per slot (0 = auto)");
  app.add_option("--slots", f.slots, "horizon in slots");
  app.add_option("--threshold", f.threshold, "population above which a run is declared diverged");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--replicates", f.replicates, "replicates per scenario");
  app.add_option("--tau", f.tau, "adaptive-k window in slots (enables the controller)");
  app.add_option("--ramp-slot", f.ramp_slot, "slot at which lambda steps to --ramp-lambda");
  app.add_option("--ramp-lambda", f.ramp_lambda, "arrival rate after --ramp-slot");
  app.add_option("--file-len", f.file_len, "file size in bytes");
  app.add_option("--out", f.out, "output directory for CSVs and summary.jsonl");
  app.add_option("--threads", f.threads, "parallel replicates")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "stability fraction over a (k, lambda) grid");
  std::vector<std::size_t> sweep_k{3, 5};
  std::vector<double> sweep_lambda{2.0, 3.0, 4.0, 6.0};
  sweep->add_option("--k", sweep_k, "k values")->delimiter(',');
  sweep->add_option("--lambda", sweep_lambda, "lambda grid")->delimiter(',');
  std::size_t sweep_reps = 10;
  std::uint64_t sweep_slots = 50000;
  std::string sweep_policy = "proposed";
  std::uint64_t sweep_seed = 1;
  std::string sweep_out;
  sweep->add_option("--replicates", sweep_reps);
  sweep->add_option("--slots", sweep_slots);
  sweep->add_option("--policy", sweep_policy);
  sweep->add_option("--seed", sweep_seed);
  sweep->add_option("--out", sweep_out);
  sweep->add_option("--threads", f.threads)->check(CLI::PositiveNumber);

  auto* summarize = app.add_subcommand("summarize", "recompute a run summary from its CSV");
  std::string csv_path;
  summarize->add_option("csv", csv_path)->required()->check(CLI::ExistingFile);

  auto* list = app.add_subcommand("list", "list builtin scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& n : fswarm::builtin_scenario_names()) std::cout << n << "\n";
      return 0;
    }
    if (*summarize) {
      std::ifstream in(csv_path);
      std::cout << fswarm::to_json_line(fswarm::summarize_csv(in)) << "\n";
      return 0;
    }
    if (*sweep) {
      fswarm::SimConfig base;
      base.policy = fswarm::PolicyConfig::from_name(sweep_policy);
      base.max_slots = sweep_slots;
      prepare_out_dir(sweep_out);
      const auto cells =
          fswarm::sweep_boundary(base, sweep_k, sweep_lambda, sweep_reps, sweep_seed, f.threads, sweep_out);
      std::cout << "k,lambda,runs,stable,stable_fraction\n";
      for (const auto& c : cells)
        std::printf("%zu,%.6g,%zu,%zu,%.6g\n", c.k, c.lambda, c.runs, c.stable, c.stable_fraction());
      return 0;
    }
    const auto spec = build_spec(f);
    prepare_out_dir(spec.out_dir);
    print_summary(fswarm::run_matrix(spec, f.threads, false));
  } catch (const fswarm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
