#include "multileave/population.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "multileave/simulator.hpp"

namespace multileave {

void PopulationConfig::validate() const {
  if (algorithms < 2) throw std::invalid_argument("need at least two algorithms");
  if (users < 4) throw std::invalid_argument("need at least four users");
  if (length < 1 || candidate_count < 1) {
    throw std::invalid_argument("length and candidate count must be positive");
  }
  if (!(base_ctr > 0.0) || base_ctr > 1.0) throw std::invalid_argument("base CTR must be in (0, 1]");
  if (effect < 0.0 || heterogeneity < 0.0) {
    throw std::invalid_argument("effect and heterogeneity must be non-negative");
  }
  if (mismatch_click_ratio < 0.0 || mismatch_click_ratio > 1.0) {
    throw std::invalid_argument("mismatch click ratio must be in [0, 1]");
  }
  if (!(activity_shape > 0.0) || max_impressions < 1) {
    throw std::invalid_argument("activity shape and impression cap must be positive");
  }
  if (group_bias_algorithm && *group_bias_algorithm >= algorithms) {
    throw std::invalid_argument("group-bias algorithm out of range");
  }
}

namespace {

struct UserTraits {
  std::size_t impressions = 1;
  double propensity = 0.0;
};

UserTraits draw_traits(const PopulationConfig& config, Rng& rng) {
  UserTraits traits;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = 1.0 - unit(rng);  // (0, 1]
  const double pareto = std::pow(u, -1.0 / config.activity_shape);
  traits.impressions = std::clamp<std::size_t>(static_cast<std::size_t>(pareto), 1,
                                               config.max_impressions);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = config.heterogeneity;
  traits.propensity =
      std::min(0.95, config.base_ctr * std::exp(h * normal(rng) - 0.5 * h * h));
  return traits;
}

std::vector<double> qualities(const PopulationConfig& config) {
  std::vector<double> q(config.algorithms);
  for (std::size_t a = 0; a < q.size(); ++a) {
    q[a] = 1.0 + config.effect * static_cast<double>(a) / static_cast<double>(q.size() - 1);
  }
  return q;
}

}  // namespace

Population simulate_population(const PopulationConfig& config, std::size_t threads) {
  config.validate();
  const auto quality = qualities(config);
  double quality_sum = 0.0;
  for (double q : quality) quality_sum += q;

  GomConfig gom;
  gom.credit = CreditFunction::Personalization;
  gom.candidate_count = config.candidate_count;
  gom.length = config.length;
  const auto weights = gom.weight.table(config.length);
  const std::size_t k = config.algorithms;

  Population population;
  population.multileaving.resize(config.users);
  parallel_for(config.users, threads, [&](std::size_t user) {
    Rng rng = derive_rng(config.seed, user, 1);
    const UserTraits traits = draw_traits(config, rng);
    std::bernoulli_distribution clicks(traits.propensity);
    std::discrete_distribution<std::size_t> preferred(quality.begin(), quality.end());
    CreditVector credit(k);
    for (std::size_t i = 0; i < traits.impressions; ++i) {
      const InputRankingSet inputs = shuffled_inputs(k, config.length, false, rng);
      const CreditTable table(inputs, gom.credit);
      const GreedySelection shown = gom_select(table, gom, weights, rng);
      if (!clicks(rng)) continue;
      const std::size_t r = preferred(rng);
      const std::size_t position =
          sample_click(table, shown.output, r, config.click_bias_percent, rng);
      const auto row = table.credits_of(shown.output[position - 1]);
      for (std::size_t j = 0; j < k; ++j) credit[j] += row[j];
    }
    auto& scores = population.multileaving[user].scores;
    scores.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      scores[j] = credit[j] / static_cast<double>(traits.impressions);
    }
  });

  const std::size_t ab_users = k * config.users / 2;
  population.ab.resize(ab_users);
  parallel_for(ab_users, threads, [&](std::size_t user) {
    Rng rng = derive_rng(config.seed, user, 2);
    UserTraits traits = draw_traits(config, rng);
    const std::size_t algorithm = user % k;
    if (config.group_bias_algorithm && *config.group_bias_algorithm == algorithm) {
      traits.propensity *= config.group_bias_factor;
    }
    const double preferred = quality[algorithm] / quality_sum;
    const double ctr = std::min(
        1.0, traits.propensity * (preferred + config.mismatch_click_ratio * (1.0 - preferred)));
    std::binomial_distribution<std::size_t> clicks(traits.impressions, ctr);
    population.ab[user] = {algorithm, static_cast<double>(clicks(rng)) /
                                          static_cast<double>(traits.impressions)};
  });
  return population;
}

}  // namespace multileave
