#include "multileave/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace multileave {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string MethodSpec::label() const {
  if (method == Method::TeamDraft) return "TDM";
  switch (credit) {
    case CreditFunction::Inverse:
      return "GOM-I";
    case CreditFunction::NegativeRank:
      return "GOM-N";
    case CreditFunction::Personalization:
      return "GOM-P";
  }
  return "GOM";
}

std::string MethodSpec::credit_label() const {
  if (method == Method::TeamDraft) return "team";
  return std::string(to_string(credit));
}

std::optional<MethodSpec> MethodSpec::parse(std::string_view label) {
  if (label == "TDM") return MethodSpec{Method::TeamDraft, CreditFunction::Personalization};
  if (label == "GOM-I") return MethodSpec{Method::Greedy, CreditFunction::Inverse};
  if (label == "GOM-N") return MethodSpec{Method::Greedy, CreditFunction::NegativeRank};
  if (label == "GOM-P") return MethodSpec{Method::Greedy, CreditFunction::Personalization};
  return std::nullopt;
}

void SimConfig::validate() const {
  if (rankers < 2) throw std::invalid_argument("need at least two rankers");
  if (length < 1) throw std::invalid_argument("ranking length must be positive");
  if (!(click_bias_percent > 0.0) || click_bias_percent > 100.0) {
    throw std::invalid_argument("click bias must be in (0, 100]");
  }
  if (numeval < 1 || numclick < 1 || runs < 1) {
    throw std::invalid_argument("numeval, numclick and runs must be positive");
  }
  if (gom.candidate_count < 1) throw std::invalid_argument("candidate count must be positive");
  if (gom.alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
}

namespace {

class TeamDraftModel final : public ImpressionModel {
 public:
  void show(const CreditTable& table, std::size_t length, Rng& rng, Shown& shown) const override {
    tdm_draft(table, length, rng, shown.output, shown.teams);
    shown.terms.reset();
  }
  void credit(const CreditTable&, const Shown& shown, std::size_t position, std::size_t,
              std::span<double> acc) const override {
    acc[shown.teams[position - 1]] += 1.0;
  }
};

class GreedyModel final : public ImpressionModel {
 public:
  GreedyModel(GomConfig config, std::size_t length)
      : config_(std::move(config)), weights_(config_.weight.table(length)) {
    config_.length = length;
  }

  void show(const CreditTable& table, std::size_t length, Rng& rng, Shown& shown) const override {
    GreedySelection selection;
    if (length == config_.length) {
      selection = gom_select(table, config_, weights_, rng);
    } else {
      GomConfig adjusted = config_;
      adjusted.length = length;
      selection = gom_select(table, adjusted, config_.weight.table(length), rng);
    }
    shown.output = std::move(selection.output);
    shown.teams.clear();
    shown.terms = selection.terms;
  }

  void credit(const CreditTable& table, const Shown& shown, std::size_t position, std::size_t,
              std::span<double> acc) const override {
    const auto row = table.credits_of(shown.output[position - 1]);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += row[j];
  }

 private:
  GomConfig config_;
  std::vector<double> weights_;
};

std::size_t top_fraction(double percent, std::size_t size) {
  const double exact = percent * static_cast<double>(size) / 100.0;
  auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::size_t>(count, 1, size);
}

}  // namespace

InputRankingSet shuffled_inputs(std::size_t rankers, std::size_t length, bool identical,
                                Rng& rng) {
  std::vector<ItemId> initial(length);
  std::iota(initial.begin(), initial.end(), ItemId{0});
  shuffle_in_place(std::span(initial), rng);
  std::vector<Ranking> rankings;
  rankings.reserve(rankers);
  for (std::size_t k = 0; k < rankers; ++k) {
    std::vector<ItemId> items = initial;
    if (!identical) shuffle_in_place(std::span(items), rng);
    rankings.emplace_back(std::move(items));
  }
  return InputRankingSet(std::move(rankings));
}

std::unique_ptr<ImpressionModel> make_impression_model(const SimConfig& config) {
  if (config.method.method == Method::TeamDraft) return std::make_unique<TeamDraftModel>();
  GomConfig gom = config.gom;
  gom.credit = config.method.credit;
  return std::make_unique<GreedyModel>(std::move(gom), config.length);
}

void Moments::add(double x) {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

void Moments::merge(const Moments& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double total = static_cast<double>(count_ + other.count_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.count_) / total;
  m2_ += other.m2_ + delta * delta * static_cast<double>(count_) *
                         static_cast<double>(other.count_) / total;
  count_ += other.count_;
}

double Moments::mean() const { return count_ == 0 ? kNaN : mean_; }

double Moments::stddev() const {
  return count_ == 0 ? kNaN : std::sqrt(m2_ / static_cast<double>(count_));
}

std::size_t sample_click(const CreditTable& table, std::span<const std::uint32_t> output,
                         std::size_t preferred, double percent, Rng& rng) {
  const std::size_t cutoff = top_fraction(percent, table.dense_inputs()[preferred].size());
  std::vector<std::size_t> eligible;
  eligible.reserve(output.size());
  for (std::size_t i = 0; i < output.size(); ++i) {
    const std::uint32_t rank = table.rank(output[i], preferred);
    if (rank != 0 && rank <= cutoff) eligible.push_back(i + 1);
  }
  if (eligible.empty()) return 1 + static_cast<std::size_t>(uniform_index(rng, output.size()));
  return eligible[uniform_index(rng, eligible.size())];
}

RoundResult simulate_round(const SimConfig& config, const ImpressionModel& model,
                           std::size_t preferred, Rng& rng, ImpressionStats* stats,
                           bool keep_trace) {
  if (preferred >= config.rankers) throw std::out_of_range("preferred ranker out of range");
  const std::size_t n = config.rankers;
  RoundResult result{CreditVector(n), {}};
  Shown shown;
  for (std::size_t click = 0; click < config.numclick; ++click) {
    const InputRankingSet inputs =
        shuffled_inputs(n, config.length, config.identical_inputs, rng);
    const CreditTable table(inputs, config.method.credit);
    model.show(table, config.length, rng, shown);
    if (shown.output.empty()) continue;

    const std::size_t position =
        sample_click(table, shown.output, preferred, config.click_bias_percent, rng);
    model.credit(table, shown, position, preferred, result.credit.span());

    if (keep_trace) result.trace.push_back({position, table.item(shown.output[position - 1])});
    if (stats != nullptr && shown.terms) {
      stats->insensitivity.add(shown.terms->normalized_insensitivity());
      stats->bias.add(bias_statistic(bias_profile(table, shown.output), n));
    }
  }
  return result;
}

Rng round_rng(std::uint64_t seed, std::size_t run, std::size_t round) {
  return derive_rng(seed, run, round);
}

namespace {

struct RunOutput {
  RunRecord record;
  ImpressionStats stats;
};

RunOutput run_once(const SimConfig& config, const ImpressionModel& model, std::size_t run) {
  RunOutput out;
  out.record.run = run;
  std::size_t wins = 0;
  for (std::size_t round = 0; round < config.numeval; ++round) {
    Rng rng = round_rng(config.seed, run, round);
    const auto preferred = static_cast<std::size_t>(uniform_index(rng, config.rankers));
    const RoundResult result = simulate_round(config, model, preferred, rng, &out.stats);
    if (config.literal_win_rule) {
      for (std::size_t k = 0; k < config.rankers; ++k) {
        if (result.credit[k] > result.credit[preferred]) ++wins;
      }
    } else {
      wins += winner_set(result.credit, preferred).strict_wins;
    }
  }
  out.record.accuracy = static_cast<double>(wins) /
                        static_cast<double>(config.numeval * (config.rankers - 1));
  out.record.insensitivity = out.stats.insensitivity.mean();
  out.record.bias_mean = out.stats.bias.mean();
  out.record.bias_std = out.stats.bias.stddev();
  return out;
}

SimResult reduce_runs(std::vector<RunOutput>& outputs) {
  SimResult result;
  ImpressionStats pooled;
  double accuracy = 0.0;
  double insensitivity = 0.0;
  for (auto& output : outputs) {
    accuracy += output.record.accuracy;
    insensitivity += output.record.insensitivity;
    pooled.bias.merge(output.stats.bias);
    result.runs.push_back(output.record);
  }
  const double runs = static_cast<double>(outputs.size());
  result.accuracy = accuracy / runs;
  result.insensitivity = insensitivity / runs;
  result.bias_mean = pooled.bias.mean();
  result.bias_std = pooled.bias.stddev();
  return result;
}

}  // namespace

RunRecord simulate_run(const SimConfig& config, const ImpressionModel& model, std::size_t run) {
  config.validate();
  return run_once(config, model, run).record;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

SimResult simulate_accuracy(const SimConfig& config, const ImpressionModel& model,
                            std::size_t threads) {
  config.validate();
  std::vector<RunOutput> outputs(config.runs);
  parallel_for(config.runs, threads,
               [&](std::size_t run) { outputs[run] = run_once(config, model, run); });
  return reduce_runs(outputs);
}

SimResult simulate_accuracy(const SimConfig& config, std::size_t threads) {
  const auto model = make_impression_model(config);
  return simulate_accuracy(config, *model, threads);
}

std::vector<SimResult> simulate_grid(std::span<const SimConfig> configs, std::size_t threads) {
  std::vector<std::unique_ptr<ImpressionModel>> models;
  std::vector<std::size_t> offsets;
  std::size_t tasks = 0;
  for (const auto& config : configs) {
    config.validate();
    models.push_back(make_impression_model(config));
    offsets.push_back(tasks);
    tasks += config.runs;
  }
  std::vector<RunOutput> outputs(tasks);
  parallel_for(tasks, threads, [&](std::size_t task) {
    const auto c = static_cast<std::size_t>(
        std::upper_bound(offsets.begin(), offsets.end(), task) - offsets.begin() - 1);
    outputs[task] = run_once(configs[c], *models[c], task - offsets[c]);
  });
  std::vector<SimResult> results;
  results.reserve(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<RunOutput> slice(outputs.begin() + static_cast<std::ptrdiff_t>(offsets[c]),
                                 outputs.begin() +
                                     static_cast<std::ptrdiff_t>(offsets[c] + configs[c].runs));
    results.push_back(reduce_runs(slice));
  }
  return results;
}

namespace {

std::vector<SweepRow> run_sweep(std::vector<SimConfig> configs, std::size_t threads) {
  auto results = simulate_grid(configs, threads);
  std::vector<SweepRow> rows;
  rows.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    rows.push_back({std::move(configs[i]), std::move(results[i])});
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> sweep_rankers(const SimConfig& base, std::span<const MethodSpec> methods,
                                    std::span<const std::size_t> ranker_counts,
                                    std::size_t threads) {
  std::vector<SimConfig> configs;
  for (const auto& method : methods) {
    for (std::size_t n : ranker_counts) {
      SimConfig config = base;
      config.method = method;
      config.rankers = n;
      configs.push_back(std::move(config));
    }
  }
  return run_sweep(std::move(configs), threads);
}

std::vector<SweepRow> sweep_length(const SimConfig& base, std::span<const MethodSpec> methods,
                                   std::span<const std::size_t> lengths, std::size_t threads) {
  std::vector<SimConfig> configs;
  for (const auto& method : methods) {
    for (std::size_t l : lengths) {
      SimConfig config = base;
      config.method = method;
      config.length = l;
      configs.push_back(std::move(config));
    }
  }
  return run_sweep(std::move(configs), threads);
}

std::vector<std::size_t> default_ranker_counts() {
  std::vector<std::size_t> out;
  for (std::size_t n = 2; n <= 20; ++n) out.push_back(n);
  return out;
}

std::vector<std::size_t> default_lengths() {
  std::vector<std::size_t> out;
  for (std::size_t l = 5; l <= 195; l += 10) out.push_back(l);
  return out;
}

bool BiasDistribution::bell_shaped() const {
  return std::fabs(mean - median) < 0.25 * stddev;
}

BiasDistribution measure_bias_distribution(const SimConfig& config, std::size_t generations,
                                           std::size_t threads) {
  config.validate();
  GomConfig gom = config.gom;
  gom.credit = config.method.credit;
  gom.length = config.length;
  const auto weights = gom.weight.table(config.length);

  BiasDistribution dist;
  dist.samples.resize(generations);
  parallel_for(generations, threads, [&](std::size_t g) {
    Rng rng = round_rng(config.seed, g, 0xb1a5u);
    const InputRankingSet inputs =
        shuffled_inputs(config.rankers, config.length, config.identical_inputs, rng);
    const CreditTable table(inputs, gom.credit);
    const GreedySelection selection = gom_select(table, gom, weights, rng);
    dist.samples[g] = bias_statistic(bias_profile(table, selection.output), config.rankers);
  });
  if (generations == 0) return dist;

  Moments moments;
  for (double s : dist.samples) moments.add(s);
  dist.mean = moments.mean();
  dist.stddev = moments.stddev();
  std::vector<double> sorted = dist.samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  dist.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return dist;
}

std::vector<AlphaRow> alpha_sensitivity(const SimConfig& base, std::span<const double> alphas,
                                        std::size_t threads) {
  std::vector<SimConfig> configs;
  for (double alpha : alphas) {
    SimConfig config = base;
    config.gom.alpha = alpha;
    configs.push_back(std::move(config));
  }
  auto results = simulate_grid(configs, threads);
  std::vector<AlphaRow> rows;
  for (std::size_t i = 0; i < alphas.size(); ++i) rows.push_back({alphas[i], std::move(results[i])});
  return rows;
}

namespace {

std::string number(double value) {
  if (std::isnan(value)) return {};
  return fmt::format("{}", value);
}

void write_row(std::ostream& out, const SimConfig& config, std::string_view run, double accuracy,
               double insensitivity, double bias_mean, double bias_std) {
  const double alpha = config.method.method == Method::TeamDraft ? kNaN : config.gom.alpha;
  out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", config.method.label(),
                     config.method.credit_label(), config.rankers, config.length, number(alpha),
                     run, number(accuracy), number(insensitivity), number(bias_mean),
                     number(bias_std), config.seed);
}

}  // namespace

void write_sim_csv_header(std::ostream& out) {
  out << "method,credit,n,l,alpha,run,accuracy,insensitivity,bias_mean,bias_std,seed\n";
}

void write_sim_csv_rows(std::ostream& out, const SimConfig& config, const SimResult& result,
                        bool per_run) {
  if (per_run) {
    for (const auto& run : result.runs) {
      write_row(out, config, std::to_string(run.run), run.accuracy, run.insensitivity,
                run.bias_mean, run.bias_std);
    }
  }
  write_row(out, config, "all", result.accuracy, result.insensitivity, result.bias_mean,
            result.bias_std);
}

}  // namespace multileave
