#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace multileave {

using ItemId = std::uint64_t;

/// An ordered list of distinct items. Positions are 1-based when exposed
/// through rank_of(); the underlying storage is a plain vector.
class Ranking {
 public:
  Ranking() = default;
  explicit Ranking(std::vector<ItemId> items);
  Ranking(std::initializer_list<ItemId> items);

  const std::vector<ItemId>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  ItemId operator[](std::size_t index) const { return items_[index]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  bool contains(ItemId item) const;

  friend bool operator==(const Ranking&, const Ranking&) = default;

 private:
  std::vector<ItemId> items_;
};

/// Rankings produced by the compared rankers; index j identifies ranker j.
class InputRankingSet {
 public:
  InputRankingSet() = default;
  explicit InputRankingSet(std::vector<Ranking> rankings);
  InputRankingSet(std::initializer_list<Ranking> rankings);

  const std::vector<Ranking>& rankings() const { return rankings_; }
  std::size_t size() const { return rankings_.size(); }
  const Ranking& operator[](std::size_t j) const { return rankings_[j]; }
  auto begin() const { return rankings_.begin(); }
  auto end() const { return rankings_.end(); }

  /// Distinct items over all inputs, in order of first appearance when the
  /// inputs are scanned ranker by ranker.
  std::vector<ItemId> item_union() const;

  /// Throws std::invalid_argument unless there are at least two rankers and
  /// every ranking is non-empty with distinct items.
  void validate() const;

 private:
  std::vector<Ranking> rankings_;
};

enum class CreditFunction { Inverse, NegativeRank, Personalization };

std::string_view to_string(CreditFunction credit);
std::optional<CreditFunction> parse_credit_function(std::string_view name);

/// 1-based position of `item`, or nullopt when absent.
std::optional<std::size_t> rank_of(ItemId item, const Ranking& ranking);

double inverse_credit(ItemId item, const Ranking& ranking);
double negative_rank_credit(ItemId item, const Ranking& ranking);

/// Negative count of inputs that place `item` at or above its position in
/// `inputs[target]`. An input lacking the item counts with rank |input|+1.
double personalization_credit(ItemId item, std::size_t target,
                              const InputRankingSet& inputs);

/// Dispatches to one of the three credit functions above.
double credit(CreditFunction function, ItemId item, std::size_t target,
              const InputRankingSet& inputs);

/// Maps the items of an InputRankingSet to dense indices 0..U-1 and keeps
/// per-input rank tables plus the full credit matrix for one credit function.
/// Built once per comparison; construction is O(U * n log n).
class CreditTable {
 public:
  CreditTable(const InputRankingSet& inputs, CreditFunction function);

  std::size_t ranker_count() const { return ranker_count_; }
  std::size_t universe_size() const { return universe_.size(); }
  CreditFunction function() const { return function_; }

  /// Item behind a dense index.
  ItemId item(std::size_t index) const { return universe_[index]; }
  /// Dense index of an item; nullopt when the item is in no input.
  std::optional<std::size_t> index_of(ItemId item) const;

  /// 1-based rank of dense item `index` in input j, 0 when absent.
  std::uint32_t rank(std::size_t index, std::size_t j) const {
    return ranks_[index * ranker_count_ + j];
  }

  /// Credit of dense item `index` with respect to input j.
  double credit(std::size_t index, std::size_t j) const {
    return credits_[index * ranker_count_ + j];
  }
  std::span<const double> credits_of(std::size_t index) const {
    return {credits_.data() + index * ranker_count_, ranker_count_};
  }

  /// Dense input orders: inputs[j] as dense indices.
  const std::vector<std::vector<std::uint32_t>>& dense_inputs() const { return dense_inputs_; }

 private:
  std::size_t ranker_count_ = 0;
  CreditFunction function_;
  std::vector<ItemId> universe_;
  // Either a flat id->index table (small, dense ids) or a sorted lookup.
  std::vector<std::uint32_t> flat_index_;
  std::vector<std::pair<ItemId, std::uint32_t>> sorted_index_;
  std::vector<std::uint32_t> ranks_;
  std::vector<double> credits_;
  std::vector<std::vector<std::uint32_t>> dense_inputs_;
};

}  // namespace multileave
