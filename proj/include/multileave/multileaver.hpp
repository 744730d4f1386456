#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "multileave/random.hpp"
#include "multileave/ranking.hpp"

namespace multileave {

/// Click-probability weight per 1-based output position. Defaults to 1/i.
class PositionWeight {
 public:
  PositionWeight();
  explicit PositionWeight(std::function<double(std::size_t)> weight);

  double operator()(std::size_t position) const { return weight_(position); }
  /// Weights for positions 1..length.
  std::vector<double> table(std::size_t length) const;

 private:
  std::function<double(std::size_t)> weight_;
};

enum class Method { TeamDraft, Greedy };

std::string_view to_string(Method method);
/// Accepts "TDM"/"team-draft" and "GOM"/"greedy".
std::optional<Method> parse_method(std::string_view name);

struct GomConfig {
  std::size_t candidate_count = 10;
  double alpha = 0.0;
  CreditFunction credit = CreditFunction::Personalization;
  std::size_t length = 10;
  std::uint64_t seed = 0;
  PositionWeight weight;
};

struct MultileaveOutcome {
  Ranking output;
  Method method = Method::Greedy;
  /// Team draft only: teams[i] is the ranker that contributed output[i].
  std::vector<std::size_t> teams;
  /// Greedy only.
  double objective_value = 0.0;
  std::size_t candidates_evaluated = 0;

  std::optional<std::size_t> team_of(ItemId item) const;
};

/// Team-draft multileaving. Each round shuffles the rankers; each ranker in
/// turn appends its highest-ranked unused item until `length` items are placed
/// or every input is exhausted.
MultileaveOutcome tdm_multileave(const InputRankingSet& inputs, std::size_t length, Rng& rng);
MultileaveOutcome tdm_multileave(const InputRankingSet& inputs, std::size_t length,
                                 std::uint64_t seed);

/// Prefix-respecting candidates: `count` draws, each walking the positions and
/// taking the top unused item of a uniformly drawn non-exhausted input.
/// Duplicates are removed, first occurrence kept.
std::vector<Ranking> candidate_rankings(const InputRankingSet& inputs, std::size_t length,
                                        std::size_t count, Rng& rng);
std::vector<Ranking> candidate_rankings(const InputRankingSet& inputs, std::size_t length,
                                        std::size_t count, std::uint64_t seed);

/// Sum over rankers of the squared deviation of the position-weighted credit
/// sum from its mean across rankers.
double insensitivity(const Ranking& output, const InputRankingSet& inputs, CreditFunction credit,
                     const PositionWeight& weight = {});

/// Insensitivity divided by the squared mean weighted credit; 0 when both are 0.
double normalized_insensitivity(const Ranking& output, const InputRankingSet& inputs,
                                CreditFunction credit, const PositionWeight& weight = {});

/// lambda_r for r = 1..|output|: the widest gap between two rankers'
/// unweighted prefix credit sums over the first r output items.
std::vector<double> bias_profile(const Ranking& output, const InputRankingSet& inputs,
                                 CreditFunction credit);

/// Scale-free bias summary: mean of the profile divided by (rankers * length).
double bias_statistic(std::span<const double> profile, std::size_t ranker_count);

/// Greedy optimized multileaving: evaluates alpha * sum(lambda) + sigma^2 on
/// each candidate and returns the first minimizer.
MultileaveOutcome gom_multileave(const InputRankingSet& inputs, const GomConfig& config);
MultileaveOutcome gom_multileave(const InputRankingSet& inputs, const GomConfig& config, Rng& rng);

// Dense-index building blocks, shared by the simulator and the service.

struct ObjectiveTerms {
  double insensitivity = 0.0;
  double mean_credit = 0.0;
  double bias_sum = 0.0;

  double normalized_insensitivity() const;
};

/// Objective terms for an output given as dense indices into `table`.
/// Bias is only accumulated when `with_bias` is set.
ObjectiveTerms evaluate_terms(const CreditTable& table, std::span<const std::uint32_t> output,
                              std::span<const double> weights, bool with_bias);

/// lambda_r profile for a dense output.
std::vector<double> bias_profile(const CreditTable& table, std::span<const std::uint32_t> output);

/// One prefix-respecting draw over dense inputs.
void draw_candidate(const CreditTable& table, std::size_t length, Rng& rng,
                    std::vector<std::uint32_t>& out);

struct GreedySelection {
  std::vector<std::uint32_t> output;
  ObjectiveTerms terms;
  double objective = 0.0;
  std::size_t candidates_evaluated = 0;
};

GreedySelection gom_select(const CreditTable& table, const GomConfig& config,
                           std::span<const double> weights, Rng& rng);

/// Dense team draft; teams receives the contributing ranker per position.
void tdm_draft(const CreditTable& table, std::size_t length, Rng& rng,
               std::vector<std::uint32_t>& out, std::vector<std::size_t>& teams);

}  // namespace multileave
