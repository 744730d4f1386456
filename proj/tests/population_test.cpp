#include <gtest/gtest.h>

#include "multileave/population.hpp"

namespace multileave {
namespace {

PopulationConfig small(double effect) {
  PopulationConfig config;
  config.algorithms = 3;
  config.users = 300;
  config.max_impressions = 40;
  config.effect = effect;
  config.seed = 11;
  return config;
}

TEST(Population, SizesAndRanges) {
  const auto pop = simulate_population(small(2.0));
  ASSERT_EQ(pop.multileaving.size(), 300u);
  ASSERT_EQ(pop.ab.size(), 450u);
  for (const auto& user : pop.multileaving) {
    ASSERT_EQ(user.scores.size(), 3u);
    for (double s : user.scores) EXPECT_LE(s, 0.0);
  }
  std::vector<std::size_t> groups(3, 0);
  for (const auto& user : pop.ab) {
    ASSERT_LT(user.algorithm, 3u);
    ++groups[user.algorithm];
    EXPECT_GE(user.score, 0.0);
    EXPECT_LE(user.score, 1.0);
  }
  for (auto g : groups) EXPECT_EQ(g, 150u);
}

TEST(Population, DeterministicAcrossThreads) {
  const auto x = simulate_population(small(1.0), 1);
  const auto y = simulate_population(small(1.0), 4);
  for (std::size_t u = 0; u < x.multileaving.size(); ++u) {
    ASSERT_EQ(x.multileaving[u].scores, y.multileaving[u].scores);
  }
  for (std::size_t u = 0; u < x.ab.size(); ++u) ASSERT_EQ(x.ab[u].score, y.ab[u].score);
}

TEST(Population, BetterAlgorithmsEarnMoreCredit) {
  auto config = small(4.0);
  config.users = 600;
  const auto pop = simulate_population(config);
  std::vector<double> ml(3, 0.0), ab(3, 0.0);
  for (const auto& user : pop.multileaving) {
    for (std::size_t a = 0; a < 3; ++a) ml[a] += user.scores[a];
  }
  for (const auto& user : pop.ab) ab[user.algorithm] += user.score;
  EXPECT_LT(ml[0], ml[1]);
  EXPECT_LT(ml[1], ml[2]);
  EXPECT_LT(ab[0], ab[2]);
}

TEST(Population, ZeroEffectKeepsCurvesHigh) {
  auto config = small(0.0);
  config.users = 400;
  const auto pop = simulate_population(config);
  const std::vector<std::size_t> counts{100, 400};
  const BootstrapOptions options{.resamples = 20, .seed = 2};
  for (const auto& point : bootstrap_pvalue_curve(pop.multileaving, counts, options)) {
    EXPECT_GT(point.mean_p, 0.2);
  }
  for (const auto& point : bootstrap_pvalue_curve(pop.ab, 3, counts, options)) {
    EXPECT_GT(point.mean_p, 0.2);
  }
}

TEST(Population, Validation) {
  auto config = small(1.0);
  config.algorithms = 1;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config = small(1.0);
  config.base_ctr = 1.5;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config = small(1.0);
  config.group_bias_algorithm = 3;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  EXPECT_NO_THROW(small(1.0).validate());
}

}  // namespace
}  // namespace multileave
