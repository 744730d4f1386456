#pragma once

// Direct-summation reference implementations used to check the library.
// Everything here works on plain vectors and recomputes from the definitions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "multileave/ranking.hpp"

namespace oracle {

using Items = std::vector<std::uint64_t>;
using Inputs = std::vector<Items>;

inline std::size_t effective_rank(std::uint64_t item, const Items& ranking) {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i] == item) return i + 1;
  }
  return ranking.size() + 1;
}

inline bool contains(const Items& ranking, std::uint64_t item) {
  return std::find(ranking.begin(), ranking.end(), item) != ranking.end();
}

inline double credit(multileave::CreditFunction fn, std::uint64_t item, std::size_t target,
                     const Inputs& inputs) {
  const double rank = static_cast<double>(effective_rank(item, inputs[target]));
  switch (fn) {
    case multileave::CreditFunction::Inverse:
      return 1.0 / rank;
    case multileave::CreditFunction::NegativeRank:
      return -rank;
    case multileave::CreditFunction::Personalization: {
      if (!contains(inputs[target], item)) return -rank;
      int count = 0;
      for (const auto& other : inputs) count += effective_rank(item, other) <= rank;
      return -count;
    }
  }
  return 0.0;
}

inline std::vector<double> weighted_sums(const Items& output, const Inputs& inputs,
                                         multileave::CreditFunction fn) {
  std::vector<double> sums(inputs.size(), 0.0);
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    for (std::size_t i = 0; i < output.size(); ++i) {
      sums[j] += credit(fn, output[i], j, inputs) / static_cast<double>(i + 1);
    }
  }
  return sums;
}

inline double sigma2(const Items& output, const Inputs& inputs, multileave::CreditFunction fn) {
  const auto sums = weighted_sums(output, inputs, fn);
  const double mu = std::accumulate(sums.begin(), sums.end(), 0.0) / sums.size();
  double total = 0.0;
  for (double s : sums) total += (s - mu) * (s - mu);
  return total;
}

inline double mean_credit(const Items& output, const Inputs& inputs,
                          multileave::CreditFunction fn) {
  const auto sums = weighted_sums(output, inputs, fn);
  return std::accumulate(sums.begin(), sums.end(), 0.0) / sums.size();
}

/// lambda_r: largest pairwise gap between unweighted prefix credit sums.
inline std::vector<double> lambdas(const Items& output, const Inputs& inputs,
                                   multileave::CreditFunction fn) {
  std::vector<double> out;
  for (std::size_t r = 1; r <= output.size(); ++r) {
    double widest = 0.0;
    for (std::size_t a = 0; a < inputs.size(); ++a) {
      for (std::size_t b = 0; b < inputs.size(); ++b) {
        double sa = 0.0, sb = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
          sa += credit(fn, output[i], a, inputs);
          sb += credit(fn, output[i], b, inputs);
        }
        widest = std::max(widest, std::abs(sa - sb));
      }
    }
    out.push_back(widest);
  }
  return out;
}

inline double objective(const Items& output, const Inputs& inputs, multileave::CreditFunction fn,
                        double alpha) {
  const auto profile = lambdas(output, inputs, fn);
  return alpha * std::accumulate(profile.begin(), profile.end(), 0.0) +
         sigma2(output, inputs, fn);
}

/// Every output of length min(l, |union|) whose item at each position is the
/// top unused item of some input.
inline std::set<Items> prefix_respecting(const Inputs& inputs, std::size_t length) {
  std::set<std::uint64_t> universe;
  for (const auto& r : inputs) universe.insert(r.begin(), r.end());
  length = std::min(length, universe.size());
  std::set<Items> out;
  Items current;
  auto recurse = [&](auto&& self) -> void {
    if (current.size() == length) {
      out.insert(current);
      return;
    }
    std::set<std::uint64_t> options;
    for (const auto& r : inputs) {
      for (auto item : r) {
        if (!contains(current, item)) {
          options.insert(item);
          break;
        }
      }
    }
    for (auto item : options) {
      current.push_back(item);
      self(self);
      current.pop_back();
    }
  };
  recurse(recurse);
  return out;
}

inline multileave::InputRankingSet to_set(const Inputs& inputs) {
  std::vector<multileave::Ranking> rankings;
  for (const auto& r : inputs) rankings.emplace_back(r);
  return multileave::InputRankingSet(std::move(rankings));
}

/// Three rankings over items 1..102 that differ only in the order of
/// 100, 101 and 102.
inline Inputs worked_example() {
  Items base(99);
  std::iota(base.begin(), base.end(), 1);
  Inputs inputs(3, base);
  for (auto x : {100, 101, 102}) inputs[0].push_back(x);
  for (auto x : {101, 102, 100}) inputs[1].push_back(x);
  for (auto x : {102, 100, 101}) inputs[2].push_back(x);
  return inputs;
}

}  // namespace oracle
