#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "multileave/multileaver.hpp"
#include "oracle.hpp"

namespace oracle {

struct SweepStats {
  std::size_t cases = 0;
  std::size_t saturated = 0;
  std::size_t objective_mismatches = 0;
  std::size_t term_mismatches = 0;
  double worst_term_error = 0.0;
  std::string first_failure;
};

// Checks one input set: library sigma^2 / lambda against direct summation on
// every prefix-respecting ranking, and GOM against the exhaustive minimum when
// its candidate pool covers the whole space.
inline void check_case(const Inputs& raw, std::size_t length, double alpha,
                       std::size_t candidates, std::uint64_t seed, SweepStats& stats) {
  using multileave::CreditFunction;
  const auto inputs = to_set(raw);
  const auto space = prefix_respecting(raw, length);
  ++stats.cases;

  double best = std::numeric_limits<double>::infinity();
  for (const auto& output : space) {
    const multileave::Ranking ranking(output);
    const double s_lib = multileave::insensitivity(ranking, inputs, CreditFunction::Personalization);
    const double s_ref = sigma2(output, raw, CreditFunction::Personalization);
    const auto l_lib = multileave::bias_profile(ranking, inputs, CreditFunction::Personalization);
    const auto l_ref = lambdas(output, raw, CreditFunction::Personalization);
    double err = std::abs(s_lib - s_ref);
    for (std::size_t r = 0; r < l_ref.size(); ++r) err = std::max(err, std::abs(l_lib[r] - l_ref[r]));
    stats.worst_term_error = std::max(stats.worst_term_error, err);
    if (err > 1e-9) ++stats.term_mismatches;
    best = std::min(best, objective(output, raw, CreditFunction::Personalization, alpha));
  }

  const auto pool = multileave::candidate_rankings(inputs, length, candidates, seed);
  if (pool.size() != space.size()) return;
  ++stats.saturated;

  multileave::GomConfig config;
  config.candidate_count = candidates;
  config.alpha = alpha;
  config.length = length;
  config.seed = seed;
  const auto outcome = multileave::gom_multileave(inputs, config);
  const double chosen = objective(outcome.output.items(), raw, CreditFunction::Personalization, alpha);
  const bool valid = space.contains(outcome.output.items());
  if (!valid || std::abs(chosen - best) > 1e-9 || std::abs(outcome.objective_value - best) > 1e-9) {
    if (stats.objective_mismatches++ == 0) {
      stats.first_failure = "objective " + std::to_string(chosen) + " vs minimum " +
                            std::to_string(best);
    }
  }
}

// n = 2 and 3 over a 5-item universe. The first input is fixed to 1..5 (any
// input set is a relabeling of one with that first input); the others range
// over all permutations, with every `stride`-th combination kept for n = 3.
// Lengths 2..4, alpha 0 and 1 alternate.
inline SweepStats exhaustive_sweep(std::size_t stride, std::size_t candidates) {
  SweepStats stats;
  Items base{1, 2, 3, 4, 5};
  std::vector<Items> perms;
  Items p = base;
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));

  std::size_t counter = 0;
  for (const auto& second : perms) {
    for (std::size_t length = 2; length <= 4; ++length) {
      check_case({base, second}, length, counter % 2 ? 1.0 : 0.0, candidates, counter, stats);
      ++counter;
    }
  }
  for (std::size_t i = 0; i < perms.size(); ++i) {
    for (std::size_t k = 0; k < perms.size(); ++k) {
      if ((i * perms.size() + k) % stride != 0) continue;
      const std::size_t length = 2 + (i + k) % 3;
      check_case({base, perms[i], perms[k]}, length, counter % 2 ? 1.0 : 0.0, candidates,
                 counter, stats);
      ++counter;
    }
  }
  // Personalized inputs with different lengths and memberships.
  const std::vector<Inputs> partial = {
      {{1, 2, 3}, {4, 5}},       {{1, 2}, {2, 3, 4}, {5, 1}}, {{3, 1, 4}, {1, 5, 2}},
      {{5}, {1, 2, 3, 4}},       {{2, 4}, {4, 2}, {1, 3, 5}}, {{1, 2, 3, 4, 5}, {5, 4}},
  };
  for (const auto& inputs : partial) {
    for (std::size_t length = 1; length <= 4; ++length) {
      check_case(inputs, length, counter % 2 ? 1.0 : 0.0, candidates, counter, stats);
      ++counter;
    }
  }
  return stats;
}

}  // namespace oracle
