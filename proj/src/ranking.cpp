#include "multileave/ranking.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace multileave {

namespace {

constexpr std::uint32_t kNoIndex = std::numeric_limits<std::uint32_t>::max();

}  // namespace

Ranking::Ranking(std::vector<ItemId> items) : items_(std::move(items)) {}

Ranking::Ranking(std::initializer_list<ItemId> items) : items_(items) {}

bool Ranking::contains(ItemId item) const {
  return std::find(items_.begin(), items_.end(), item) != items_.end();
}

InputRankingSet::InputRankingSet(std::vector<Ranking> rankings) : rankings_(std::move(rankings)) {}

InputRankingSet::InputRankingSet(std::initializer_list<Ranking> rankings) : rankings_(rankings) {}

std::vector<ItemId> InputRankingSet::item_union() const {
  std::vector<ItemId> out;
  std::unordered_set<ItemId> seen;
  for (const auto& ranking : rankings_) {
    for (ItemId item : ranking) {
      if (seen.insert(item).second) out.push_back(item);
    }
  }
  return out;
}

void InputRankingSet::validate() const {
  if (rankings_.size() < 2) {
    throw std::invalid_argument("a comparison needs at least two input rankings, got " +
                                std::to_string(rankings_.size()));
  }
  for (std::size_t j = 0; j < rankings_.size(); ++j) {
    const auto& items = rankings_[j].items();
    if (items.empty()) {
      throw std::invalid_argument("input ranking " + std::to_string(j) + " is empty");
    }
    std::unordered_set<ItemId> seen(items.begin(), items.end());
    if (seen.size() != items.size()) {
      throw std::invalid_argument("input ranking " + std::to_string(j) +
                                  " contains duplicate items");
    }
  }
}

std::string_view to_string(CreditFunction credit) {
  switch (credit) {
    case CreditFunction::Inverse:
      return "inverse";
    case CreditFunction::NegativeRank:
      return "negative-rank";
    case CreditFunction::Personalization:
      return "personalization";
  }
  return "unknown";
}

std::optional<CreditFunction> parse_credit_function(std::string_view name) {
  if (name == "inverse" || name == "I") return CreditFunction::Inverse;
  if (name == "negative-rank" || name == "N") return CreditFunction::NegativeRank;
  if (name == "personalization" || name == "P") return CreditFunction::Personalization;
  return std::nullopt;
}

std::optional<std::size_t> rank_of(ItemId item, const Ranking& ranking) {
  const auto& items = ranking.items();
  auto it = std::find(items.begin(), items.end(), item);
  if (it == items.end()) return std::nullopt;
  return static_cast<std::size_t>(it - items.begin()) + 1;
}

namespace {

std::size_t effective_rank(ItemId item, const Ranking& ranking) {
  return rank_of(item, ranking).value_or(ranking.size() + 1);
}

}  // namespace

double inverse_credit(ItemId item, const Ranking& ranking) {
  return 1.0 / static_cast<double>(effective_rank(item, ranking));
}

double negative_rank_credit(ItemId item, const Ranking& ranking) {
  return -static_cast<double>(effective_rank(item, ranking));
}

double personalization_credit(ItemId item, std::size_t target, const InputRankingSet& inputs) {
  const Ranking& ranking = inputs[target];
  auto rank = rank_of(item, ranking);
  if (!rank) return -static_cast<double>(ranking.size() + 1);
  std::size_t at_or_above = 0;
  for (const auto& other : inputs) {
    if (effective_rank(item, other) <= *rank) ++at_or_above;
  }
  return -static_cast<double>(at_or_above);
}

double credit(CreditFunction function, ItemId item, std::size_t target,
              const InputRankingSet& inputs) {
  switch (function) {
    case CreditFunction::Inverse:
      return inverse_credit(item, inputs[target]);
    case CreditFunction::NegativeRank:
      return negative_rank_credit(item, inputs[target]);
    case CreditFunction::Personalization:
      return personalization_credit(item, target, inputs);
  }
  throw std::invalid_argument("unknown credit function");
}

CreditTable::CreditTable(const InputRankingSet& inputs, CreditFunction function)
    : ranker_count_(inputs.size()), function_(function) {
  std::size_t total = 0;
  ItemId max_id = 0;
  for (const auto& ranking : inputs) {
    total += ranking.size();
    for (ItemId item : ranking) max_id = std::max(max_id, item);
  }
  universe_.reserve(total);
  dense_inputs_.resize(ranker_count_);

  const bool flat = max_id < 4 * static_cast<ItemId>(total) + 64;
  std::unordered_map<ItemId, std::uint32_t> hashed;
  if (flat) {
    flat_index_.assign(static_cast<std::size_t>(max_id) + 1, kNoIndex);
  } else {
    hashed.reserve(total);
  }
  auto intern = [&](ItemId item) -> std::uint32_t {
    const auto next = static_cast<std::uint32_t>(universe_.size());
    if (flat) {
      auto& slot = flat_index_[static_cast<std::size_t>(item)];
      if (slot == kNoIndex) {
        slot = next;
        universe_.push_back(item);
      }
      return slot;
    }
    auto [it, inserted] = hashed.emplace(item, next);
    if (inserted) universe_.push_back(item);
    return it->second;
  };
  for (std::size_t j = 0; j < ranker_count_; ++j) {
    auto& dense = dense_inputs_[j];
    dense.reserve(inputs[j].size());
    for (ItemId item : inputs[j]) dense.push_back(intern(item));
  }
  if (!flat) {
    sorted_index_.assign(hashed.begin(), hashed.end());
    std::sort(sorted_index_.begin(), sorted_index_.end());
  }

  const std::size_t universe = universe_.size();
  ranks_.assign(universe * ranker_count_, 0);
  for (std::size_t j = 0; j < ranker_count_; ++j) {
    const auto& dense = dense_inputs_[j];
    for (std::size_t pos = 0; pos < dense.size(); ++pos) {
      ranks_[dense[pos] * ranker_count_ + j] = static_cast<std::uint32_t>(pos + 1);
    }
  }

  credits_.assign(universe * ranker_count_, 0.0);
  std::vector<std::uint32_t> effective(ranker_count_);
  std::vector<std::uint32_t> sorted;
  for (std::size_t u = 0; u < universe; ++u) {
    for (std::size_t j = 0; j < ranker_count_; ++j) {
      const std::uint32_t r = ranks_[u * ranker_count_ + j];
      effective[j] = r != 0 ? r : static_cast<std::uint32_t>(inputs[j].size() + 1);
    }
    double* row = credits_.data() + u * ranker_count_;
    switch (function_) {
      case CreditFunction::Inverse:
        for (std::size_t j = 0; j < ranker_count_; ++j) row[j] = 1.0 / effective[j];
        break;
      case CreditFunction::NegativeRank:
        for (std::size_t j = 0; j < ranker_count_; ++j) row[j] = -static_cast<double>(effective[j]);
        break;
      case CreditFunction::Personalization:
        if (ranker_count_ > 32) {
          sorted.assign(effective.begin(), effective.end());
          std::sort(sorted.begin(), sorted.end());
        }
        for (std::size_t j = 0; j < ranker_count_; ++j) {
          if (ranks_[u * ranker_count_ + j] == 0) {
            row[j] = -static_cast<double>(effective[j]);
            continue;
          }
          std::size_t count = 0;
          if (ranker_count_ > 32) {
            count = static_cast<std::size_t>(
                std::upper_bound(sorted.begin(), sorted.end(), effective[j]) - sorted.begin());
          } else {
            for (std::size_t k = 0; k < ranker_count_; ++k) count += effective[k] <= effective[j];
          }
          row[j] = -static_cast<double>(count);
        }
        break;
    }
  }
}

std::optional<std::size_t> CreditTable::index_of(ItemId item) const {
  if (!flat_index_.empty() || sorted_index_.empty()) {
    if (item >= flat_index_.size()) return std::nullopt;
    const auto slot = flat_index_[static_cast<std::size_t>(item)];
    if (slot == kNoIndex) return std::nullopt;
    return slot;
  }
  auto it = std::lower_bound(sorted_index_.begin(), sorted_index_.end(),
                             std::make_pair(item, std::uint32_t{0}));
  if (it == sorted_index_.end() || it->first != item) return std::nullopt;
  return it->second;
}

}  // namespace multileave
