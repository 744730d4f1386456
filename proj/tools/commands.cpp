#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <thread>

#include <fmt/format.h>

#include "multileave/population.hpp"
#include "multileave/simulator.hpp"

#ifndef MULTILEAVE_VERSION
#define MULTILEAVE_VERSION "0.0.0"
#endif

namespace multileave::cli {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimOptions, methods, credit, runs, seed, alpha,
                                                candidates, numeval, numclick, click_bias,
                                                literal_win_rule, identical_inputs, per_run)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SweepRankersOptions, sim, n_min, n_max, length)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SweepLengthOptions, sim, rankers, l_min, l_max,
                                                length_step)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(InsensitivityOptions, sim, axis, n_min, n_max,
                                                length, rankers, l_min, l_max, length_step)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BiasOptions, rankers, length, candidates, alpha,
                                                generations, seed, identical_inputs)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AlphaStudyOptions, sim, rankers, length, alphas)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PvalueCompareOptions, algorithms, users, length,
                                                candidates, click_bias, effect, base_ctr,
                                                heterogeneity, mismatch_click_ratio,
                                                activity_shape, max_impressions,
                                                group_bias_algorithm, group_bias_factor, grid,
                                                resamples, seed)

std::filesystem::path OutputPaths::manifest() const {
  auto path = csv;
  return path.replace_extension(".manifest.json");
}

std::filesystem::path OutputPaths::summary() const {
  auto path = csv;
  return path.replace_extension(".summary.json");
}

std::size_t default_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using Stopwatch = std::chrono::steady_clock;

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<MethodSpec> parse_methods(const SimOptions& o) {
  const auto credit = parse_credit_function(o.credit);
  if (!credit) throw UsageError("unknown credit function '" + o.credit + "'");
  if (o.methods.empty()) throw UsageError("--methods needs at least one method");
  std::vector<MethodSpec> methods;
  for (const auto& label : o.methods) {
    if (label == "GOM") {
      methods.push_back({Method::Greedy, *credit});
      continue;
    }
    auto spec = MethodSpec::parse(label);
    if (!spec) throw UsageError("unknown method '" + label + "' (TDM, GOM, GOM-I, GOM-P, GOM-N)");
    methods.push_back(*spec);
  }
  return methods;
}

SimConfig base_config(const SimOptions& o) {
  SimConfig config;
  config.runs = o.runs;
  config.seed = o.seed;
  config.numeval = o.numeval;
  config.numclick = o.numclick;
  config.click_bias_percent = o.click_bias;
  config.literal_win_rule = o.literal_win_rule;
  config.identical_inputs = o.identical_inputs;
  config.gom.alpha = o.alpha;
  config.gom.candidate_count = o.candidates;
  return config;
}

void check_config(const SimConfig& config) {
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::size_t> ranker_range(std::size_t lo, std::size_t hi) {
  if (lo < 2) throw UsageError("--n-min must be at least 2");
  if (hi < lo) throw UsageError("--n-max must be at least --n-min");
  std::vector<std::size_t> out;
  for (std::size_t n = lo; n <= hi; ++n) out.push_back(n);
  return out;
}

std::vector<std::size_t> length_range(std::size_t lo, std::size_t hi, std::size_t step) {
  if (step == 0) throw UsageError("--length-step must be positive");
  if (lo < 1) throw UsageError("--l-min must be positive");
  if (hi < lo) throw UsageError("--l-max must be at least --l-min");
  std::vector<std::size_t> out;
  for (std::size_t l = lo; l <= hi; l += step) out.push_back(l);
  return out;
}

json sim_config_json(const SimConfig& c) {
  return {{"rankers", c.rankers},
          {"length", c.length},
          {"numeval", c.numeval},
          {"numclick", c.numclick},
          {"click_bias_percent", c.click_bias_percent},
          {"candidate_count", c.gom.candidate_count},
          {"alpha", c.gom.alpha},
          {"seed", c.seed},
          {"runs", c.runs},
          {"literal_win_rule", c.literal_win_rule},
          {"identical_inputs", c.identical_inputs}};
}

json finish_manifest(const std::string& command, json options, std::uint64_t seed,
                     const OutputPaths& out, Stopwatch::time_point started, json extra = {}) {
  json manifest = {{"subcommand", command},
                   {"version", MULTILEAVE_VERSION},
                   {"seed", seed},
                   {"options", std::move(options)},
                   {"outputs", {{"csv", out.csv.string()}}}};
  if (!extra.is_null()) manifest.update(extra);
  manifest["duration_seconds"] =
      std::chrono::duration<double>(Stopwatch::now() - started).count();
  auto file = open_output(out.manifest());
  file << manifest.dump(2) << '\n';
  return manifest;
}

void write_rows(std::ostream& csv, const std::vector<SweepRow>& rows, bool per_run) {
  for (const auto& row : rows) write_sim_csv_rows(csv, row.config, row.result, per_run);
}

std::vector<MethodSpec> credit_methods(const SimOptions& o) {
  auto methods = parse_methods(o);
  for (const auto& m : methods) {
    if (m.method == Method::TeamDraft) {
      throw UsageError("insensitivity is defined for credit-function methods only");
    }
  }
  return methods;
}

}  // namespace

json run_sweep_rankers(const SweepRankersOptions& o, const OutputPaths& out, std::size_t threads) {
  const auto started = Stopwatch::now();
  const auto methods = parse_methods(o.sim);
  const auto counts = ranker_range(o.n_min, o.n_max);
  SimConfig base = base_config(o.sim);
  base.length = o.length;
  base.rankers = o.n_min;
  check_config(base);

  const auto rows = sweep_rankers(base, methods, counts, threads);
  auto csv = open_output(out.csv);
  write_sim_csv_header(csv);
  write_rows(csv, rows, o.sim.per_run);
  return finish_manifest("sweep-rankers", o, o.sim.seed, out, started,
                         {{"sim_config", sim_config_json(base)}});
}

json run_sweep_length(const SweepLengthOptions& o, const OutputPaths& out, std::size_t threads) {
  const auto started = Stopwatch::now();
  const auto methods = parse_methods(o.sim);
  const auto lengths = length_range(o.l_min, o.l_max, o.length_step);
  SimConfig base = base_config(o.sim);
  base.rankers = o.rankers;
  base.length = o.l_min;
  check_config(base);

  const auto rows = sweep_length(base, methods, lengths, threads);
  auto csv = open_output(out.csv);
  write_sim_csv_header(csv);
  write_rows(csv, rows, o.sim.per_run);
  return finish_manifest("sweep-length", o, o.sim.seed, out, started,
                         {{"sim_config", sim_config_json(base)}});
}

json run_insensitivity(const InsensitivityOptions& o, const OutputPaths& out,
                       std::size_t threads) {
  const auto started = Stopwatch::now();
  const auto methods = credit_methods(o.sim);
  if (o.axis != "rankers" && o.axis != "length" && o.axis != "both") {
    throw UsageError("--axis must be rankers, length or both");
  }
  SimConfig base = base_config(o.sim);
  std::vector<SweepRow> rows;
  if (o.axis != "length") {
    const auto counts = ranker_range(o.n_min, o.n_max);
    SimConfig config = base;
    config.length = o.length;
    config.rankers = o.n_min;
    check_config(config);
    rows = sweep_rankers(config, methods, counts, threads);
  }
  if (o.axis != "rankers") {
    const auto lengths = length_range(o.l_min, o.l_max, o.length_step);
    SimConfig config = base;
    config.rankers = o.rankers;
    config.length = o.l_min;
    check_config(config);
    auto more = sweep_length(config, methods, lengths, threads);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  auto csv = open_output(out.csv);
  write_sim_csv_header(csv);
  write_rows(csv, rows, o.sim.per_run);
  return finish_manifest("insensitivity", o, o.sim.seed, out, started,
                         {{"sim_config", sim_config_json(base)}});
}

json run_bias(const BiasOptions& o, const OutputPaths& out, std::size_t threads) {
  const auto started = Stopwatch::now();
  if (o.generations < 1) throw UsageError("--generations must be positive");
  SimConfig config;
  config.rankers = o.rankers;
  config.length = o.length;
  config.seed = o.seed;
  config.identical_inputs = o.identical_inputs;
  config.method = {Method::Greedy, CreditFunction::Personalization};
  config.gom.candidate_count = o.candidates;
  config.gom.alpha = o.alpha;
  check_config(config);

  const auto dist = measure_bias_distribution(config, o.generations, threads);
  auto csv = open_output(out.csv);
  csv << "sample,bias\n";
  for (std::size_t g = 0; g < dist.samples.size(); ++g) {
    csv << fmt::format("{},{}\n", g, dist.samples[g]);
  }
  const json summary = {{"samples", dist.samples.size()},
                        {"mean", dist.mean},
                        {"stddev", dist.stddev},
                        {"median", dist.median},
                        {"stddev_over_mean", dist.mean != 0.0 ? dist.stddev / dist.mean : 0.0},
                        {"bell_shaped", dist.bell_shaped()}};
  auto summary_file = open_output(out.summary());
  summary_file << summary.dump(2) << '\n';
  return finish_manifest("bias", o, o.seed, out, started,
                         {{"sim_config", sim_config_json(config)},
                          {"summary", summary},
                          {"outputs", {{"csv", out.csv.string()},
                                       {"summary", out.summary().string()}}}});
}

json run_alpha_study(const AlphaStudyOptions& o, const OutputPaths& out, std::size_t threads) {
  const auto started = Stopwatch::now();
  const auto methods = credit_methods(o.sim);
  if (o.alphas.empty()) throw UsageError("--alphas needs at least one value");
  for (double a : o.alphas) {
    if (!(a >= 0.0)) throw UsageError("alpha values must be non-negative");
  }
  SimConfig base = base_config(o.sim);
  base.rankers = o.rankers;
  base.length = o.length;
  check_config(base);

  auto csv = open_output(out.csv);
  write_sim_csv_header(csv);
  for (const auto& method : methods) {
    SimConfig config = base;
    config.method = method;
    for (const auto& row : alpha_sensitivity(config, o.alphas, threads)) {
      SimConfig shown = config;
      shown.gom.alpha = row.alpha;
      write_sim_csv_rows(csv, shown, row.result, o.sim.per_run);
    }
  }
  return finish_manifest("alpha-study", o, o.sim.seed, out, started,
                         {{"sim_config", sim_config_json(base)}});
}

std::vector<std::size_t> default_pvalue_grid(std::size_t users) {
  std::vector<std::size_t> grid;
  for (std::size_t n = 100; n <= std::min<std::size_t>(users, 1000); n += 100) grid.push_back(n);
  for (std::size_t n = 1500; n <= users; n += 500) grid.push_back(n);
  if (grid.empty() || grid.back() != users) grid.push_back(users);
  return grid;
}

json run_pvalue_compare(const PvalueCompareOptions& o, const OutputPaths& out,
                        std::size_t threads) {
  const auto started = Stopwatch::now();
  PopulationConfig config;
  config.algorithms = o.algorithms;
  config.users = o.users;
  config.length = o.length;
  config.candidate_count = o.candidates;
  config.click_bias_percent = o.click_bias;
  config.effect = o.effect;
  config.base_ctr = o.base_ctr;
  config.heterogeneity = o.heterogeneity;
  config.mismatch_click_ratio = o.mismatch_click_ratio;
  config.activity_shape = o.activity_shape;
  config.max_impressions = o.max_impressions;
  if (o.group_bias_algorithm >= 0) {
    config.group_bias_algorithm = static_cast<std::size_t>(o.group_bias_algorithm);
  }
  config.group_bias_factor = o.group_bias_factor;
  config.seed = o.seed;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto grid = o.grid.empty() ? default_pvalue_grid(o.users) : o.grid;
  for (std::size_t n : grid) {
    if (n < 4 || n > o.users) {
      throw UsageError(fmt::format("grid value {} outside 4..{}", n, o.users));
    }
  }
  if (o.resamples < 1) throw UsageError("--resamples must be positive");

  const Population population = simulate_population(config, threads);
  BootstrapOptions bootstrap;
  bootstrap.resamples = o.resamples;
  bootstrap.seed = o.seed;
  const auto paired = bootstrap_pvalue_curve(
      std::span<const PairedRecord>(population.multileaving), grid, bootstrap);
  const auto unpaired = bootstrap_pvalue_curve(std::span<const AssignedRecord>(population.ab),
                                               o.algorithms, grid, bootstrap);

  auto csv = open_output(out.csv);
  write_pvalue_curve_csv(csv, "multileaving-synthetic", paired, true);
  write_pvalue_curve_csv(csv, "ab-synthetic", unpaired, false);

  auto crossing = [](const std::vector<CurvePoint>& curve) -> json {
    auto n = crossing_point(curve);
    return n ? json(*n) : json(nullptr);
  };
  const json summary = {{"synthetic", true},
                        {"multileaving_crossing", crossing(paired)},
                        {"ab_crossing", crossing(unpaired)}};
  auto summary_file = open_output(out.summary());
  summary_file << summary.dump(2) << '\n';
  return finish_manifest("pvalue-compare", o, o.seed, out, started,
                         {{"summary", summary},
                          {"outputs", {{"csv", out.csv.string()},
                                       {"summary", out.summary().string()}}}});
}

json replay_manifest(const json& manifest, const OutputPaths& out, std::size_t threads) {
  const std::string command = manifest.at("subcommand");
  const json& options = manifest.at("options");
  if (command == "sweep-rankers") {
    return run_sweep_rankers(options.get<SweepRankersOptions>(), out, threads);
  }
  if (command == "sweep-length") {
    return run_sweep_length(options.get<SweepLengthOptions>(), out, threads);
  }
  if (command == "insensitivity") {
    return run_insensitivity(options.get<InsensitivityOptions>(), out, threads);
  }
  if (command == "bias") return run_bias(options.get<BiasOptions>(), out, threads);
  if (command == "alpha-study") {
    return run_alpha_study(options.get<AlphaStudyOptions>(), out, threads);
  }
  if (command == "pvalue-compare") {
    return run_pvalue_compare(options.get<PvalueCompareOptions>(), out, threads);
  }
  throw UsageError("manifest names unknown subcommand '" + command + "'");
}

}  // namespace multileave::cli
