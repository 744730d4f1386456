#include <map>
#include <set>

#include <gtest/gtest.h>

#include "gom_oracle.hpp"
#include "multileave/multileaver.hpp"
#include "oracle.hpp"

namespace multileave {
namespace {

constexpr ItemId a = 1, b = 2, c = 3, d = 4;

using Items = std::vector<ItemId>;

TEST(TeamDraft, IdenticalInputsGiveCommonRanking) {
  const InputRankingSet inputs{{a, b, c}, {a, b, c}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(tdm_multileave(inputs, 3, seed).output, (Ranking{a, b, c}));
  }
}

TEST(TeamDraft, DisjointInputsBothOrders) {
  const InputRankingSet inputs{{a, b}, {c, d}};
  std::set<Items> seen;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto outcome = tdm_multileave(inputs, 2, seed);
    seen.insert(outcome.output.items());
    EXPECT_EQ(outcome.team_of(a), 0u);
    EXPECT_EQ(outcome.team_of(c), 1u);
  }
  EXPECT_EQ(seen, (std::set<Items>{{a, c}, {c, a}}));
}

TEST(TeamDraft, SharedTopItemComesFirst) {
  const InputRankingSet inputs{{a, b, c}, {a, c, b}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EXPECT_EQ(tdm_multileave(inputs, 3, seed).output[0], a);
  }
}

TEST(TeamDraft, TeamsBalancedAndLocal) {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 5;
    oracle::Items universe(12);
    std::iota(universe.begin(), universe.end(), 1);
    oracle::Inputs raw(n);
    for (auto& r : raw) {
      shuffle_in_place(std::span(universe), rng);
      r = universe;
    }
    const auto inputs = oracle::to_set(raw);
    const std::size_t length = 1 + trial % 12;
    const auto outcome = tdm_multileave(inputs, length, rng);
    ASSERT_EQ(outcome.output.size(), length);
    ASSERT_EQ(outcome.teams.size(), length);

    std::vector<std::size_t> sizes(n, 0);
    oracle::Items placed;
    for (std::size_t i = 0; i < length; ++i) {
      const std::size_t team = outcome.teams[i];
      ++sizes[team];
      // The contributing ranker's best item not yet placed.
      ItemId expected = 0;
      for (auto item : raw[team]) {
        if (!oracle::contains(placed, item)) {
          expected = item;
          break;
        }
      }
      ASSERT_EQ(outcome.output[i], expected);
      placed.push_back(outcome.output[i]);
    }
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    EXPECT_LE(*hi - *lo, 1u);
  }
}

TEST(TeamDraft, Deterministic) {
  const InputRankingSet inputs{{a, b, c, d}, {d, c, b, a}, {b, d, a, c}};
  EXPECT_EQ(tdm_multileave(inputs, 4, 77).output, tdm_multileave(inputs, 4, 77).output);
  EXPECT_EQ(tdm_multileave(inputs, 4, 77).teams, tdm_multileave(inputs, 4, 77).teams);
}

TEST(TeamDraft, Rejections) {
  EXPECT_THROW(tdm_multileave(InputRankingSet{{a, b}}, 2, 0), std::invalid_argument);
  EXPECT_THROW(tdm_multileave(InputRankingSet{{a}, {b}}, 0, 0), std::invalid_argument);
  // Longer than the union: clamped.
  EXPECT_EQ(tdm_multileave(InputRankingSet{{a}, {b}}, 5, 0).output.size(), 2u);
}

std::set<Items> candidate_set(const InputRankingSet& inputs, std::size_t length, std::size_t m) {
  std::set<Items> out;
  for (const auto& r : candidate_rankings(inputs, length, m, 3)) out.insert(r.items());
  return out;
}

TEST(Candidates, IdenticalInputsDedupeToOne) {
  const auto pool = candidate_rankings(InputRankingSet{{a, b, c}, {a, b, c}}, 3, 10, 1);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool[0], (Ranking{a, b, c}));
}

TEST(Candidates, SwappedInputs) {
  EXPECT_EQ(candidate_set(InputRankingSet{{a, b}, {b, a}}, 2, 200),
            (std::set<Items>{{a, b}, {b, a}}));
}

TEST(Candidates, DisjointInputs) {
  const auto got = candidate_set(InputRankingSet{{a, b}, {c, d}}, 2, 200);
  const std::set<Items> allowed{{a, b}, {a, c}, {c, a}, {c, d}};
  EXPECT_TRUE(std::includes(allowed.begin(), allowed.end(), got.begin(), got.end()));
  EXPECT_EQ(got, allowed);
}

TEST(Candidates, PrefixPropertyAndSaturation) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    oracle::Inputs raw(3);
    oracle::Items universe{1, 2, 3, 4, 5, 6};
    for (auto& r : raw) {
      shuffle_in_place(std::span(universe), rng);
      r.assign(universe.begin(), universe.begin() + 2 + trial % 5);
    }
    const auto space = oracle::prefix_respecting(raw, 3);
    const auto got = candidate_set(oracle::to_set(raw), 3, 2000);
    EXPECT_EQ(got, space);
  }
}

TEST(Insensitivity, SwappedPairByHand) {
  const InputRankingSet inputs{{a, b}, {b, a}};
  const Ranking output{a, b};
  EXPECT_DOUBLE_EQ(insensitivity(output, inputs, CreditFunction::Personalization), 0.125);
  EXPECT_NEAR(normalized_insensitivity(output, inputs, CreditFunction::Personalization),
              0.125 / 5.0625, 1e-12);
  const auto terms = evaluate_terms(CreditTable(inputs, CreditFunction::Personalization),
                                    std::vector<std::uint32_t>{0, 1}, std::vector{1.0, 0.5}, true);
  EXPECT_DOUBLE_EQ(terms.mean_credit, -2.25);
}

TEST(Insensitivity, IdenticalInputsAreZero) {
  const InputRankingSet inputs{{a, b, c}, {a, b, c}, {a, b, c}};
  for (auto fn : {CreditFunction::Inverse, CreditFunction::NegativeRank,
                  CreditFunction::Personalization}) {
    EXPECT_EQ(insensitivity(Ranking{c, a, b}, inputs, fn), 0.0);
    EXPECT_EQ(normalized_insensitivity(Ranking{c, a, b}, inputs, fn), 0.0);
  }
}

TEST(BiasProfile, SwappedPairByHand) {
  const auto profile =
      bias_profile(Ranking{a, b}, InputRankingSet{{a, b}, {b, a}}, CreditFunction::Personalization);
  EXPECT_EQ(profile, (std::vector<double>{1.0, 0.0}));
}

TEST(BiasProfile, IdenticalInputsAreZero) {
  const auto profile = bias_profile(Ranking{b, a, c}, InputRankingSet{{a, b, c}, {a, b, c}},
                                    CreditFunction::Personalization);
  EXPECT_EQ(profile, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(BiasProfile, DisjointInversePositive) {
  const InputRankingSet inputs{{a, b, c}, {d, 5, 6}};
  for (double lambda : bias_profile(Ranking{a, b, c}, inputs, CreditFunction::Inverse)) {
    EXPECT_GT(lambda, 0.0);
  }
}

TEST(BiasStatistic, MeanOverRankersTimesLength) {
  const std::vector<double> profile{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(bias_statistic(profile, 2), 2.0 / 6.0);
  EXPECT_EQ(bias_statistic({}, 2), 0.0);
}

TEST(Greedy, IdenticalInputs) {
  GomConfig config;
  config.length = 3;
  const auto outcome = gom_multileave(InputRankingSet{{a, b, c}, {a, b, c}}, config);
  EXPECT_EQ(outcome.output, (Ranking{a, b, c}));
  EXPECT_EQ(outcome.objective_value, 0.0);
  EXPECT_EQ(outcome.candidates_evaluated, 1u);
}

TEST(Greedy, TieGoesToFirstCandidate) {
  const InputRankingSet inputs{{a, b}, {b, a}};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GomConfig config;
    config.length = 2;
    config.candidate_count = 50;
    config.seed = seed;
    const auto outcome = gom_multileave(inputs, config);
    const auto pool = candidate_rankings(inputs, 2, 50, seed);
    EXPECT_EQ(outcome.output, pool.front());
    EXPECT_DOUBLE_EQ(outcome.objective_value, 0.125);
  }
}

TEST(Greedy, SymmetricCandidatesShareSigma) {
  const oracle::Inputs raw{{a, b, c}, {a, c, b}};
  EXPECT_DOUBLE_EQ(oracle::sigma2({a, b, c}, raw, CreditFunction::Personalization),
                   oracle::sigma2({a, c, b}, raw, CreditFunction::Personalization));
  for (double alpha : {0.0, 1000.0}) {
    GomConfig config;
    config.length = 3;
    config.candidate_count = 100;
    config.alpha = alpha;
    const auto outcome = gom_multileave(oracle::to_set(raw), config);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : oracle::prefix_respecting(raw, 3)) {
      best = std::min(best, oracle::objective(o, raw, CreditFunction::Personalization, alpha));
    }
    EXPECT_NEAR(outcome.objective_value, best, 1e-9);
  }
}

TEST(Greedy, Deterministic) {
  const InputRankingSet inputs{{a, b, c, d}, {d, c, b, a}, {b, d, a, c}};
  GomConfig config;
  config.length = 4;
  config.seed = 12;
  const auto x = gom_multileave(inputs, config);
  const auto y = gom_multileave(inputs, config);
  EXPECT_EQ(x.output, y.output);
  EXPECT_EQ(x.objective_value, y.objective_value);
}

TEST(Greedy, SelectedObjectiveIsMinimumOfPool) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    oracle::Inputs raw(2 + trial % 3);
    oracle::Items universe{1, 2, 3, 4, 5, 6, 7, 8};
    for (auto& r : raw) {
      shuffle_in_place(std::span(universe), rng);
      r = universe;
    }
    const auto inputs = oracle::to_set(raw);
    GomConfig config;
    config.length = 6;
    config.seed = trial;
    config.alpha = trial % 2 ? 0.5 : 0.0;
    const auto outcome = gom_multileave(inputs, config);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : candidate_rankings(inputs, 6, 10, trial)) {
      best = std::min(best, oracle::objective(r.items(), raw, CreditFunction::Personalization,
                                              config.alpha));
    }
    EXPECT_NEAR(outcome.objective_value, best, 1e-9);
  }
}

TEST(Greedy, BruteForceOracleOnSmallInstances) {
  const auto stats = oracle::exhaustive_sweep(97, 1000);
  EXPECT_GE(stats.saturated, 500u);
  EXPECT_EQ(stats.objective_mismatches, 0u) << stats.first_failure;
  EXPECT_EQ(stats.term_mismatches, 0u);
  EXPECT_LE(stats.worst_term_error, 1e-9);
}

TEST(Greedy, Rejections) {
  GomConfig config;
  config.candidate_count = 0;
  EXPECT_THROW(gom_multileave(InputRankingSet{{a}, {b}}, config), std::invalid_argument);
  config.candidate_count = 10;
  config.length = 0;
  EXPECT_THROW(gom_multileave(InputRankingSet{{a}, {b}}, config), std::invalid_argument);
}

TEST(ObjectiveTerms, NormalizationEdgeCases) {
  EXPECT_EQ((ObjectiveTerms{0.0, 0.0, 0.0}.normalized_insensitivity()), 0.0);
  EXPECT_TRUE(std::isinf(ObjectiveTerms{1.0, 0.0, 0.0}.normalized_insensitivity()));
  EXPECT_DOUBLE_EQ((ObjectiveTerms{2.0, -2.0, 0.0}.normalized_insensitivity()), 0.5);
}

TEST(PositionWeight, CustomWeightChangesSigma) {
  const InputRankingSet inputs{{a, b}, {b, a}};
  const PositionWeight flat([](std::size_t) { return 1.0; });
  // Flat weights: sums (-3, -3), no spread.
  EXPECT_EQ(insensitivity(Ranking{a, b}, inputs, CreditFunction::Personalization, flat), 0.0);
}

}  // namespace
}  // namespace multileave
