#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "multileave/multileaver.hpp"
#include "multileave/ranking.hpp"
#include "multileave/stats.hpp"

namespace multileave {

/// A compared method: the construction scheme plus the credit it aggregates.
/// Team draft ignores `credit` for aggregation.
struct MethodSpec {
  Method method = Method::Greedy;
  CreditFunction credit = CreditFunction::Personalization;

  /// "TDM", "GOM-I", "GOM-P" or "GOM-N".
  std::string label() const;
  /// Credit column value: "team" for TDM, else the credit function name.
  std::string credit_label() const;
  static std::optional<MethodSpec> parse(std::string_view label);

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

struct SimConfig {
  std::size_t rankers = 5;
  std::size_t length = 10;
  std::size_t numeval = 100;
  std::size_t numclick = 100;
  double click_bias_percent = 80.0;
  MethodSpec method;
  /// Candidate count and alpha; length, credit and seed come from this config.
  GomConfig gom;
  std::uint64_t seed = 0;
  std::size_t runs = 100;
  /// Scores a round by the rankers that beat the preferred one.
  bool literal_win_rule = false;
  /// Degenerate mode: every input equals the initial ranking.
  bool identical_inputs = false;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// What one impression showed, in dense item indices of its CreditTable.
struct Shown {
  std::vector<std::uint32_t> output;
  std::vector<std::size_t> teams;
  /// Present for credit-function methods.
  std::optional<ObjectiveTerms> terms;
};

/// Builds the shown ranking for one impression and credits clicks on it.
class ImpressionModel {
 public:
  virtual ~ImpressionModel() = default;
  virtual void show(const CreditTable& table, std::size_t length, Rng& rng, Shown& shown) const = 0;
  virtual void credit(const CreditTable& table, const Shown& shown, std::size_t position,
                      std::size_t preferred, std::span<double> acc) const = 0;
};

/// TDM or GOM as configured.
std::unique_ptr<ImpressionModel> make_impression_model(const SimConfig& config);

struct ClickTrace {
  std::size_t position = 0;  // 1-based in the shown ranking
  ItemId item = 0;
};

struct RoundResult {
  CreditVector credit;
  std::vector<ClickTrace> trace;
};

/// Running mean / variance with a deterministic merge.
class Moments {
 public:
  void add(double x);
  void merge(const Moments& other);
  std::size_t count() const { return count_; }
  double mean() const;
  /// Population standard deviation.
  double stddev() const;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct ImpressionStats {
  Moments insensitivity;  // sigma^2 / mu^2 per impression
  Moments bias;           // bias_statistic per impression
};

/// A random ranking of items 0..length-1 and `rankers` independent shuffles of
/// it (or exact copies when `identical`).
InputRankingSet shuffled_inputs(std::size_t rankers, std::size_t length, bool identical, Rng& rng);

/// 1-based position of a click on `output`: uniform over shown items within the
/// top `percent`% of input `preferred`, or over all of `output` when none is.
std::size_t sample_click(const CreditTable& table, std::span<const std::uint32_t> output,
                         std::size_t preferred, double percent, Rng& rng);

/// One evaluation round (numclick clicks) with a fixed preferred ranker (0-based).
RoundResult simulate_round(const SimConfig& config, const ImpressionModel& model,
                           std::size_t preferred, Rng& rng, ImpressionStats* stats = nullptr,
                           bool keep_trace = false);

struct RunRecord {
  std::size_t run = 0;
  double accuracy = 0.0;
  double insensitivity = 0.0;  // NaN for team draft
  double bias_mean = 0.0;      // NaN for team draft
  double bias_std = 0.0;       // NaN for team draft
};

struct SimResult {
  double accuracy = 0.0;
  double insensitivity = 0.0;
  double bias_mean = 0.0;
  double bias_std = 0.0;
  std::vector<RunRecord> runs;
};

/// Stream for (seed, run, round); independent of scheduling.
Rng round_rng(std::uint64_t seed, std::size_t run, std::size_t round);

/// One full repetition: numeval rounds with uniformly drawn preferred rankers.
RunRecord simulate_run(const SimConfig& config, const ImpressionModel& model, std::size_t run);

SimResult simulate_accuracy(const SimConfig& config, std::size_t threads = 1);
SimResult simulate_accuracy(const SimConfig& config, const ImpressionModel& model,
                            std::size_t threads = 1);

/// Runs every config, parallel over (config, run) pairs. Results are
/// reduced by run index, so the thread count never changes the output.
std::vector<SimResult> simulate_grid(std::span<const SimConfig> configs, std::size_t threads);

struct SweepRow {
  SimConfig config;
  SimResult result;
};

/// Accuracy over ranker counts at fixed length (base.length).
std::vector<SweepRow> sweep_rankers(const SimConfig& base, std::span<const MethodSpec> methods,
                                    std::span<const std::size_t> ranker_counts,
                                    std::size_t threads = 1);

/// Accuracy over ranking lengths at fixed ranker count (base.rankers).
std::vector<SweepRow> sweep_length(const SimConfig& base, std::span<const MethodSpec> methods,
                                   std::span<const std::size_t> lengths, std::size_t threads = 1);

std::vector<std::size_t> default_ranker_counts();  // 2..20
std::vector<std::size_t> default_lengths();        // 5, 15, ..., 195

struct BiasDistribution {
  std::vector<double> samples;
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;

  /// |mean - median| < 0.25 * stddev.
  bool bell_shaped() const;
};

/// Bias statistic of `generations` greedy rankings built on fresh shuffled
/// inputs (or identical inputs when config.identical_inputs is set).
BiasDistribution measure_bias_distribution(const SimConfig& config,
                                           std::size_t generations = 10000,
                                           std::size_t threads = 1);

struct AlphaRow {
  double alpha = 0.0;
  SimResult result;
};

/// Reruns the base config for each alpha with identical seeds.
std::vector<AlphaRow> alpha_sensitivity(const SimConfig& base, std::span<const double> alphas,
                                        std::size_t threads = 1);

/// Columns: method,credit,n,l,alpha,run,accuracy,insensitivity,bias_mean,bias_std,seed.
/// Aggregate rows carry run = "all"; per-run rows are added when requested.
void write_sim_csv_header(std::ostream& out);
void write_sim_csv_rows(std::ostream& out, const SimConfig& config, const SimResult& result,
                        bool per_run);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace multileave
