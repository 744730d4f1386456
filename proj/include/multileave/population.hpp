#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "multileave/stats.hpp"

namespace multileave {

/// Synthetic user population for comparing multileaving against A/B testing.
///
/// Every user has an activity level (impressions, heavy-tailed) and a base
/// click propensity (log-normal around `base_ctr`). Algorithm a has quality
/// 1 + effect * a / (K - 1), so algorithms are ordered worst to best.
///
/// On every impression the user prefers one algorithm, drawn with probability
/// proportional to quality. Multileaving users see a GOM-P ranking over K
/// shuffled inputs; a click happens with the user's propensity and lands near
/// the top of the preferred input. A/B users see one algorithm and click with
/// the full propensity when it is the preferred one, otherwise scaled by
/// `mismatch_click_ratio`; their score is clicks / impressions.
struct PopulationConfig {
  std::size_t algorithms = 5;
  std::size_t users = 8000;
  std::size_t length = 10;
  std::size_t candidate_count = 10;
  double click_bias_percent = 20.0;
  double effect = 2.0;
  double base_ctr = 0.5;
  /// Standard deviation of log propensity across users.
  double heterogeneity = 1.0;
  double mismatch_click_ratio = 0.5;
  /// Pareto shape of the impression count; smaller is heavier tailed.
  double activity_shape = 1.5;
  std::size_t max_impressions = 200;
  /// A/B users assigned to this algorithm get propensity scaled by
  /// `group_bias_factor`.
  std::optional<std::size_t> group_bias_algorithm;
  double group_bias_factor = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Population {
  /// One record per user: mean credit per impression for each algorithm.
  std::vector<PairedRecord> multileaving;
  /// algorithms * users / 2 users so every group can supply N/2 users for N <= users.
  std::vector<AssignedRecord> ab;
};

Population simulate_population(const PopulationConfig& config, std::size_t threads = 1);

}  // namespace multileave
