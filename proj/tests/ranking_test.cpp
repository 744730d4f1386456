#include <random>

#include <gtest/gtest.h>

#include "multileave/random.hpp"
#include "multileave/ranking.hpp"
#include "oracle.hpp"

namespace multileave {
namespace {

constexpr ItemId a = 1, b = 2, c = 3, z = 26;

TEST(RankOf, PositionsAreOneBased) {
  const Ranking r{a, b, c};
  EXPECT_EQ(rank_of(b, r), 2u);
  EXPECT_EQ(rank_of(a, r), 1u);
  EXPECT_FALSE(rank_of(z, r).has_value());
}

TEST(InverseCredit, WorkedExample) {
  const auto inputs = oracle::to_set(oracle::worked_example());
  EXPECT_DOUBLE_EQ(inverse_credit(101, inputs[0]), 1.0 / 101);
  EXPECT_DOUBLE_EQ(inverse_credit(101, inputs[1]), 1.0 / 100);
  EXPECT_DOUBLE_EQ(inverse_credit(101, inputs[2]), 1.0 / 102);
  EXPECT_DOUBLE_EQ(inverse_credit(z, Ranking{a, b, c}), 0.25);
}

TEST(NegativeRankCredit, PresentAndAbsent) {
  const Ranking r{a, b, c};
  EXPECT_EQ(negative_rank_credit(a, r), -1.0);
  EXPECT_EQ(negative_rank_credit(c, r), -3.0);
  EXPECT_EQ(negative_rank_credit(z, r), -4.0);
}

TEST(PersonalizationCredit, WorkedExample) {
  const auto inputs = oracle::to_set(oracle::worked_example());
  EXPECT_EQ(personalization_credit(101, 0, inputs), -2.0);
  EXPECT_EQ(personalization_credit(101, 1, inputs), -1.0);
  EXPECT_EQ(personalization_credit(101, 2, inputs), -3.0);
}

TEST(PersonalizationCredit, SharedPositionGivesMinusN) {
  const InputRankingSet inputs{{a, b, c}, {c, b, a}, {a, b, z}, {z, b, c}};
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    EXPECT_EQ(personalization_credit(b, j, inputs), -4.0);
  }
}

TEST(PersonalizationCredit, AbsentItemUsesTargetLength) {
  const InputRankingSet inputs{{a, b}, {c, a, b, z}};
  EXPECT_EQ(personalization_credit(z, 0, inputs), -3.0);
  // In the second input z is at rank 4; input 0 counts it at rank 3 <= 4.
  EXPECT_EQ(personalization_credit(z, 1, inputs), -2.0);
}

TEST(CreditFunctionNames, RoundTrip) {
  for (auto fn : {CreditFunction::Inverse, CreditFunction::NegativeRank,
                  CreditFunction::Personalization}) {
    EXPECT_EQ(parse_credit_function(to_string(fn)), fn);
  }
  EXPECT_EQ(parse_credit_function("P"), CreditFunction::Personalization);
  EXPECT_FALSE(parse_credit_function("dcg").has_value());
}

TEST(InputRankingSet, Validation) {
  EXPECT_THROW((InputRankingSet{{a, b}}.validate()), std::invalid_argument);
  EXPECT_THROW((InputRankingSet{{a, b}, {}}.validate()), std::invalid_argument);
  EXPECT_THROW((InputRankingSet{{a, b, a}, {c}}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((InputRankingSet{{a, b}, {c}}.validate()));
  EXPECT_EQ((InputRankingSet{{a, b}, {c, a}}.item_union()), (std::vector<ItemId>{a, b, c}));
}

oracle::Inputs random_inputs(Rng& rng, std::size_t n, std::size_t universe) {
  oracle::Inputs inputs(n);
  oracle::Items items(universe);
  std::iota(items.begin(), items.end(), 1);
  for (auto& r : inputs) {
    shuffle_in_place(std::span(items), rng);
    const std::size_t len = 1 + uniform_index(rng, universe);
    r.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(len));
  }
  return inputs;
}

// The dense table must agree with the per-item definitions, including items
// missing from some inputs and both the small-n and large-n counting paths.
TEST(CreditTable, MatchesDefinitions) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = trial % 3 == 0 ? 40 : 2 + trial % 6;
    const auto raw = random_inputs(rng, n, 3 + trial % 9);
    const auto inputs = oracle::to_set(raw);
    for (auto fn : {CreditFunction::Inverse, CreditFunction::NegativeRank,
                    CreditFunction::Personalization}) {
      const CreditTable table(inputs, fn);
      for (std::size_t u = 0; u < table.universe_size(); ++u) {
        for (std::size_t j = 0; j < n; ++j) {
          ASSERT_DOUBLE_EQ(table.credit(u, j), oracle::credit(fn, table.item(u), j, raw));
          ASSERT_DOUBLE_EQ(table.credit(u, j), credit(fn, table.item(u), j, inputs));
        }
      }
    }
  }
}

TEST(CreditTable, SparseIdsUseLookupIndex) {
  const InputRankingSet inputs{{1ull << 40, 7}, {7, 1ull << 50}};
  const CreditTable table(inputs, CreditFunction::Personalization);
  ASSERT_EQ(table.universe_size(), 3u);
  EXPECT_EQ(table.item(*table.index_of(1ull << 50)), 1ull << 50);
  EXPECT_FALSE(table.index_of(8).has_value());
  EXPECT_EQ(table.credit(*table.index_of(7), 1), -1.0);
  EXPECT_EQ(table.credit(*table.index_of(7), 0), -2.0);
}

TEST(CreditProperties, InverseDecreasesAndStaysPositive) {
  const Ranking r{5, 6, 7, 8};
  double previous = 2.0;
  for (ItemId item : r) {
    const double value = inverse_credit(item, r);
    EXPECT_GT(value, 0.0);
    EXPECT_LE(value, 1.0);
    EXPECT_LT(value, previous);
    previous = value;
  }
  EXPECT_LT(inverse_credit(99, r), previous);
}

TEST(CreditProperties, PersonalizationRankShiftInvariance) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 4;
    auto raw = random_inputs(rng, n, 6);
    auto shifted = raw;
    for (auto& r : shifted) r.insert(r.begin(), {1000, 1001, 1002});
    for (std::uint64_t item = 1; item <= 6; ++item) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!oracle::contains(raw[j], item)) continue;
        ASSERT_EQ(personalization_credit(item, j, oracle::to_set(raw)),
                  personalization_credit(item, j, oracle::to_set(shifted)));
      }
    }
  }
}

TEST(CreditProperties, EarliestInputGetsMinusOne) {
  const InputRankingSet inputs{{a, b, c}, {b, c, a}, {c, a, b}};
  EXPECT_EQ(personalization_credit(a, 0, inputs), -1.0);
  EXPECT_EQ(personalization_credit(b, 1, inputs), -1.0);
  EXPECT_EQ(personalization_credit(c, 2, inputs), -1.0);
  EXPECT_EQ(personalization_credit(a, 1, inputs), -3.0);
}

TEST(Random, UniformIndexCoversRangeEvenly) {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[uniform_index(rng, 7)];
  for (int count : counts) EXPECT_NEAR(count, 10000, 400);
}

TEST(Random, DerivedStreamsDiffer) {
  Rng x = derive_rng(1, 0, 0), y = derive_rng(1, 0, 1), x2 = derive_rng(1, 0, 0);
  const auto first = x();
  EXPECT_NE(first, y());
  EXPECT_EQ(first, x2());
}

}  // namespace
}  // namespace multileave
