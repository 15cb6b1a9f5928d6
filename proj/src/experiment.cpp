#include "fswarm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace fswarm {
namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const std::string v = trim(value);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("bad value for '" + key + "': '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad value for '" + key + "': '" + value + "'");
  }
  if (used != v.size()) throw ConfigError("bad value for '" + key + "': '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("bad value for '" + key + "': '" + value + "'");
}

std::string run_file_name(const std::string& scenario, std::size_t replicate) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_r%03zu.csv", replicate);
  return scenario + buf;
}

}  // namespace

std::uint64_t run_seed(std::uint64_t master_seed, const std::string& scenario, std::size_t replicate) {
  return mix_seed(mix_seed(master_seed ^ hash_tag(scenario)) + replicate);
}

RunSummary summarize(const std::vector<MetricsRecord>& series, std::size_t threshold) {
  RunSummary s;
  if (series.empty()) return s;
  s.final_population = series.back().population;
  if (series.back().population > threshold) {
    s.verdict = Verdict::diverged;
    s.divergence_slot = series.back().slot;
  }
  if (series.size() >= 2) {
    const Window w = tail_window(series.size(), 0.25);
    s.mean_drift = empirical_drift(series, w);
    s.growth_slope = growth_slope(series, w);
  }
  return s;
}

std::string to_json_line(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["scenario"] = s.scenario;
  j["replicate"] = s.replicate;
  j["seed"] = s.seed;
  j["verdict"] = s.verdict == Verdict::stable ? "stable" : "diverged";
  if (s.divergence_slot)
    j["divergence_slot"] = *s.divergence_slot;
  else
    j["divergence_slot"] = nullptr;
  j["final_population"] = s.final_population;
  j["mean_drift"] = s.mean_drift;
  j["growth_slope"] = s.growth_slope;
  return j.dump();
}

std::string csv_header(std::size_t k) {
  std::string h = "slot,population,arrivals_cum,departures_cum,M,one_club,server_served_new";
  for (std::size_t i = 0; i < k; ++i) h += ",alpha_" + std::to_string(i);
  return h;
}

void write_csv(std::ostream& os, const ExperimentSpec& spec, std::size_t replicate, const SimConfig& cfg,
               const RunResult& result) {
  std::size_t width = cfg.k;
  for (const auto& r : result.series) width = std::max(width, r.k);

  os << "# fswarm run\n";
  os << "# scenario=" << spec.scenario << " replicate=" << replicate << " master_seed=" << spec.master_seed
     << " seed=" << cfg.seed << "\n";
  os << "# policy=" << cfg.policy.name() << " k=" << cfg.k << " K=" << cfg.pool_size
     << " lambda=" << fmt_g(cfg.lambda) << " A=" << cfg.arrival_cap() << " max_slots=" << cfg.max_slots
     << " threshold=" << cfg.pop_threshold << " tau=" << cfg.tau << " file_len=" << cfg.file_len;
  if (cfg.ramp) os << " ramp_slot=" << cfg.ramp->slot << " ramp_lambda=" << fmt_g(cfg.ramp->lambda);
  os << "\n";
  char modulus[8];
  std::snprintf(modulus, sizeof modulus, "0x%03X", gf::kModulus);
  os << "# gf_modulus=" << modulus << " (x^8+x^4+x^3+x+1)\n";
  os << "# M = sum over peers of (k - chunks held), extensive; drift is in the same units\n";
  os << csv_header(width) << "\n";
  for (const auto& r : result.series) {
    os << r.slot << ',' << r.population << ',' << r.arrivals_cum << ',' << r.departures_cum << ',' << r.M << ','
       << (r.one_club ? 1 : 0) << ',' << (r.server_served_new ? 1 : 0);
    const auto a = r.alpha();
    for (std::size_t i = 0; i < width; ++i) os << ',' << fmt_g(i < a.size() ? a[i] : 0.0);
    os << '\n';
  }
  for (const auto& e : result.events)
    os << "# event slot=" << e.slot << " epoch=" << e.epoch << " k=" << e.new_k
       << " rate=" << fmt_g(e.estimated_rate) << "\n";
}

RunSummary summarize_csv(std::istream& is) {
  std::optional<std::size_t> threshold;
  RunSummary out;
  std::vector<MetricsRecord> series;
  bool header_seen = false;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream words(line.substr(1));
      std::string w;
      while (words >> w) {
        const auto eq = w.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = w.substr(0, eq), value = w.substr(eq + 1);
        if (key == "threshold") threshold = parse_number<std::size_t>(key, value);
        if (key == "scenario") out.scenario = value;
        if (key == "replicate") out.replicate = parse_number<std::size_t>(key, value);
        if (key == "seed") out.seed = parse_number<std::uint64_t>(key, value);
      }
      continue;
    }
    if (!header_seen) {
      if (line.rfind("slot,population,", 0) != 0) throw std::runtime_error("summarize_csv: missing column header");
      header_seen = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() < 7) throw std::runtime_error("summarize_csv: short row");
    MetricsRecord r;
    try {
      r.slot = parse_number<std::uint64_t>("slot", cols[0]);
      r.population = parse_number<std::size_t>("population", cols[1]);
      r.arrivals_cum = parse_number<std::uint64_t>("arrivals_cum", cols[2]);
      r.departures_cum = parse_number<std::uint64_t>("departures_cum", cols[3]);
      r.M = parse_number<std::uint64_t>("M", cols[4]);
    } catch (const ConfigError& e) {
      throw std::runtime_error(std::string("summarize_csv: ") + e.what());
    }
    series.push_back(std::move(r));
  }
  if (!threshold) throw std::runtime_error("summarize_csv: threshold missing from preamble");
  RunSummary s = summarize(series, *threshold);
  s.scenario = out.scenario;
  s.replicate = out.replicate;
  s.seed = out.seed;
  return s;
}

std::vector<MatrixRun> run_matrix(const ExperimentSpec& spec, unsigned threads, bool keep_series) {
  if (!spec.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(spec.out_dir, ec);
    if (ec || !std::filesystem::is_directory(spec.out_dir))
      throw std::runtime_error("cannot create output directory " + spec.out_dir.string());
  }

  std::vector<MatrixRun> runs(spec.replicates);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    runs[i].config = spec.config;
    runs[i].config.seed = run_seed(spec.master_seed, spec.scenario, i);
    runs[i].config.validate();
  }

  std::vector<std::string> errors(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        auto& r = runs[i];
        r.result = run(r.config);
        r.summary = summarize(r.result.series, r.config.pop_threshold);
        r.summary.scenario = spec.scenario;
        r.summary.replicate = i;
        r.summary.seed = r.config.seed;
        if (!spec.out_dir.empty()) {
          std::ofstream f(spec.out_dir / run_file_name(spec.scenario, i), std::ios::binary);
          write_csv(f, spec, i, r.config, r.result);
          if (!f) throw std::runtime_error("write failed for " + run_file_name(spec.scenario, i));
        }
        if (!keep_series) r.result.series = {};
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  if (!spec.out_dir.empty()) {
    std::ofstream f(spec.out_dir / "summary.jsonl", std::ios::app);
    for (const auto& r : runs) f << to_json_line(r.summary) << "\n";
    if (!f) throw std::runtime_error("cannot write summary.jsonl in " + spec.out_dir.string());
  }
  return runs;
}

std::vector<BoundaryCell> sweep_boundary(const SimConfig& base, const std::vector<std::size_t>& k_values,
                                         const std::vector<double>& lambda_grid, std::size_t replicates,
                                         std::uint64_t master_seed, unsigned threads,
                                         const std::filesystem::path& out_dir) {
  std::vector<BoundaryCell> cells;
  for (const std::size_t k : k_values) {
    for (const double lambda : lambda_grid) {
      ExperimentSpec spec;
      spec.scenario = "boundary_k" + std::to_string(k) + "_l" + fmt_g(lambda);
      spec.config = base;
      spec.config.k = k;
      spec.config.lambda = lambda;
      spec.config.max_arrivals = 0;
      spec.master_seed = master_seed;
      spec.replicates = replicates;
      spec.out_dir = out_dir;
      BoundaryCell cell{k, lambda, replicates, 0, {}};
      for (auto& r : run_matrix(spec, threads, false)) {
        if (r.summary.verdict == Verdict::stable) ++cell.stable;
        cell.summaries.push_back(r.summary);
      }
      cells.push_back(std::move(cell));
    }
  }
  if (!out_dir.empty()) {
    std::ofstream f(out_dir / "boundary.csv");
    f << "k,lambda,runs,stable,stable_fraction\n";
    for (const auto& c : cells)
      f << c.k << ',' << fmt_g(c.lambda) << ',' << c.runs << ',' << c.stable << ',' << fmt_g(c.stable_fraction()) << '\n';
  }
  return cells;
}

std::optional<double> boundary_lambda(const std::vector<BoundaryCell>& cells, std::size_t k) {
  std::optional<double> best;
  for (const auto& c : cells)
    if (c.k == k && c.stable_fraction() < 0.5 && (!best || c.lambda < *best)) best = c.lambda;
  return best;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void apply_config(ExperimentSpec& spec, const std::map<std::string, std::string>& kv) {
  auto& c = spec.config;
  std::optional<std::uint64_t> ramp_slot;
  std::optional<double> ramp_lambda;
  for (const auto& [key, value] : kv) {
    if (key == "policy") c.policy = PolicyConfig::from_name(trim(value));
    else if (key == "lambda") c.lambda = parse_double(key, value);
    else if (key == "k") c.k = parse_number<std::size_t>(key, value);
    else if (key == "K") c.pool_size = parse_number<std::size_t>(key, value);
    else if (key == "A") c.max_arrivals = parse_number<std::size_t>(key, value);
    else if (key == "slots") c.max_slots = parse_number<std::uint64_t>(key, value);
    else if (key == "threshold") c.pop_threshold = parse_number<std::size_t>(key, value);
    else if (key == "seed") spec.master_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "replicates") spec.replicates = parse_number<std::size_t>(key, value);
    else if (key == "tau") c.tau = parse_number<std::size_t>(key, value);
    else if (key == "file_len") c.file_len = parse_number<std::size_t>(key, value);
    else if (key == "one_club_fraction") c.one_club_fraction = parse_double(key, value);
    else if (key == "server_push_consumes_slot") c.server_push_consumes_slot = parse_bool(key, value);
    else if (key == "ramp_slot") ramp_slot = parse_number<std::uint64_t>(key, value);
    else if (key == "ramp_lambda") ramp_lambda = parse_double(key, value);
    else if (key == "out") spec.out_dir = trim(value);
    else if (key == "scenario") spec.scenario = trim(value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  if (ramp_slot.has_value() != ramp_lambda.has_value()) {
    if (!c.ramp) throw ConfigError("ramp_slot and ramp_lambda must be given together");
  }
  if (ramp_slot || ramp_lambda) {
    LambdaStep step = c.ramp.value_or(LambdaStep{});
    if (ramp_slot) step.slot = *ramp_slot;
    if (ramp_lambda) step.lambda = *ramp_lambda;
    c.ramp = step;
  }
}

ExperimentSpec builtin_scenario(const std::string& name) {
  ExperimentSpec spec;
  spec.scenario = name;
  spec.replicates = 10;
  auto& c = spec.config;
  c.k = 5;
  c.pool_size = 10000;
  c.lambda = 2.0;
  c.max_slots = 10000;
  c.pop_threshold = 1000;
  if (name == "fig3") {
    c.policy = PolicyConfig::from_name("baseline");
  } else if (name == "fig4") {
    c.policy = PolicyConfig::from_name("prioritize-only");
  } else if (name == "fig4_fountain") {
    c.policy = PolicyConfig::from_name("fountain-only");
  } else if (name == "fig5") {
    c.policy = PolicyConfig::from_name("proposed");
  } else if (name == "fig6") {
    c.policy = PolicyConfig::from_name("proposed");
    c.lambda = 5.5;
    c.max_slots = 50000;
  } else if (name == "adaptive") {
    c.policy = PolicyConfig::from_name("proposed");
    c.tau = 200;
    c.ramp = LambdaStep{5000, 6.0};
    c.max_slots = 20000;
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  return spec;
}

std::vector<std::string> builtin_scenario_names() {
  return {"fig3", "fig4", "fig4_fountain", "fig5", "fig6", "adaptive"};
}

}  // namespace fswarm
