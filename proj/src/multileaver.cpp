#include "multileave/multileaver.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace multileave {

PositionWeight::PositionWeight()
    : weight_([](std::size_t position) { return 1.0 / static_cast<double>(position); }) {}

PositionWeight::PositionWeight(std::function<double(std::size_t)> weight)
    : weight_(std::move(weight)) {}

std::vector<double> PositionWeight::table(std::size_t length) const {
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = weight_(i + 1);
  return out;
}

std::string_view to_string(Method method) {
  return method == Method::TeamDraft ? "TDM" : "GOM";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "TDM" || name == "team-draft") return Method::TeamDraft;
  if (name == "GOM" || name == "greedy") return Method::Greedy;
  return std::nullopt;
}

std::optional<std::size_t> MultileaveOutcome::team_of(ItemId item) const {
  if (teams.empty()) return std::nullopt;
  auto pos = rank_of(item, output);
  if (!pos) return std::nullopt;
  return teams[*pos - 1];
}

namespace {

std::size_t checked_length(const CreditTable& table, std::size_t length) {
  if (length == 0) throw std::invalid_argument("output length must be positive");
  return std::min(length, table.universe_size());
}

// Walking state for one draw: a cursor per input plus the set of placed
// items. Reset between draws so a gom_select call allocates once.
class DraftState {
 public:
  explicit DraftState(const CreditTable& table)
      : inputs_(table.dense_inputs()),
        cursors_(inputs_.size(), 0),
        used_(table.universe_size(), 0) {
    active_.reserve(inputs_.size());
    reset({});
  }

  void reset(std::span<const std::uint32_t> placed) {
    for (std::uint32_t item : placed) used_[item] = 0;
    std::fill(cursors_.begin(), cursors_.end(), 0);
    active_.clear();
    for (std::size_t j = 0; j < inputs_.size(); ++j) active_.push_back(j);
  }

  std::vector<std::size_t>& active() { return active_; }

  // Highest-ranked unused item of input j, or nullopt once it is exhausted.
  std::optional<std::uint32_t> top_unused(std::size_t j) {
    const auto& input = inputs_[j];
    auto& cursor = cursors_[j];
    while (cursor < input.size() && used_[input[cursor]]) ++cursor;
    if (cursor == input.size()) return std::nullopt;
    return input[cursor];
  }

  void place(std::uint32_t item) { used_[item] = 1; }

 private:
  const std::vector<std::vector<std::uint32_t>>& inputs_;
  std::vector<std::size_t> cursors_;
  std::vector<std::uint8_t> used_;
  std::vector<std::size_t> active_;
};

// Tracks distinct candidates; a linear scan beats hashing for the usual
// handful of candidates.
class CandidateSet {
 public:
  explicit CandidateSet(std::size_t expected) : hashed_(expected > 32) {}

  bool insert(const std::vector<std::uint32_t>& candidate) {
    if (hashed_) return index_.insert(candidate).second;
    if (std::find(list_.begin(), list_.end(), candidate) != list_.end()) return false;
    list_.push_back(candidate);
    return true;
  }

  std::size_t size() const { return hashed_ ? index_.size() : list_.size(); }

 private:
  struct Hash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const {
      std::size_t h = 1469598103934665603ull;
      for (std::uint32_t x : v) h = (h ^ x) * 1099511628211ull;
      return h;
    }
  };

  bool hashed_;
  std::vector<std::vector<std::uint32_t>> list_;
  std::unordered_set<std::vector<std::uint32_t>, Hash> index_;
};

void draw_with(DraftState& state, std::size_t length, Rng& rng, std::vector<std::uint32_t>& out) {
  state.reset(out);
  out.clear();
  auto& active = state.active();
  while (out.size() < length && !active.empty()) {
    const auto slot = static_cast<std::size_t>(uniform_index(rng, active.size()));
    auto item = state.top_unused(active[slot]);
    if (!item) {
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(slot));
      continue;
    }
    state.place(*item);
    out.push_back(*item);
  }
}

}  // namespace

void draw_candidate(const CreditTable& table, std::size_t length, Rng& rng,
                    std::vector<std::uint32_t>& out) {
  DraftState state(table);
  out.clear();
  draw_with(state, length, rng, out);
}

void tdm_draft(const CreditTable& table, std::size_t length, Rng& rng,
               std::vector<std::uint32_t>& out, std::vector<std::size_t>& teams) {
  out.clear();
  teams.clear();
  DraftState state(table);
  std::vector<std::size_t> order;
  while (out.size() < length && !state.active().empty()) {
    order = state.active();
    shuffle_in_place(std::span(order), rng);
    for (std::size_t j : order) {
      if (out.size() == length) break;
      auto item = state.top_unused(j);
      if (!item) {
        auto& active = state.active();
        active.erase(std::find(active.begin(), active.end(), j));
        continue;
      }
      state.place(*item);
      out.push_back(*item);
      teams.push_back(j);
    }
  }
}

double ObjectiveTerms::normalized_insensitivity() const {
  const double denom = mean_credit * mean_credit;
  if (denom == 0.0) return insensitivity == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return insensitivity / denom;
}

ObjectiveTerms evaluate_terms(const CreditTable& table, std::span<const std::uint32_t> output,
                              std::span<const double> weights, bool with_bias) {
  const std::size_t n = table.ranker_count();
  ObjectiveTerms terms;
  if (n == 0) return terms;
  // Small fixed-size scratch on the stack covers the common ranker counts.
  constexpr std::size_t kInline = 32;
  double weighted_inline[kInline];
  double prefix_inline[kInline];
  std::vector<double> weighted_heap, prefix_heap;
  double* weighted = weighted_inline;
  double* prefix = prefix_inline;
  if (n > kInline) {
    weighted_heap.assign(n, 0.0);
    prefix_heap.assign(n, 0.0);
    weighted = weighted_heap.data();
    prefix = prefix_heap.data();
  } else {
    std::fill_n(weighted, n, 0.0);
    std::fill_n(prefix, n, 0.0);
  }

  for (std::size_t i = 0; i < output.size(); ++i) {
    const double* row = table.credits_of(output[i]).data();
    const double w = weights[i];
    for (std::size_t j = 0; j < n; ++j) weighted[j] += w * row[j];
    if (with_bias) {
      double lo = prefix[0] += row[0];
      double hi = lo;
      for (std::size_t j = 1; j < n; ++j) {
        prefix[j] += row[j];
        lo = std::min(lo, prefix[j]);
        hi = std::max(hi, prefix[j]);
      }
      terms.bias_sum += hi - lo;
    }
  }

  // Deviations are taken relative to ranker 0 so equal sums give exactly 0.
  double shift_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) shift_sum += weighted[j] - weighted[0];
  const double shift_mean = shift_sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = (weighted[j] - weighted[0]) - shift_mean;
    ss += d * d;
  }
  terms.insensitivity = ss;
  terms.mean_credit = weighted[0] + shift_mean;
  return terms;
}

std::vector<double> bias_profile(const CreditTable& table, std::span<const std::uint32_t> output) {
  const std::size_t n = table.ranker_count();
  std::vector<double> prefix(n, 0.0);
  std::vector<double> profile;
  profile.reserve(output.size());
  for (std::uint32_t item : output) {
    auto row = table.credits_of(item);
    for (std::size_t j = 0; j < n; ++j) prefix[j] += row[j];
    auto [lo, hi] = std::minmax_element(prefix.begin(), prefix.end());
    profile.push_back(n == 0 ? 0.0 : *hi - *lo);
  }
  return profile;
}

double bias_statistic(std::span<const double> profile, std::size_t ranker_count) {
  if (profile.empty() || ranker_count == 0) return 0.0;
  double sum = 0.0;
  for (double lambda : profile) sum += lambda;
  const double mean = sum / static_cast<double>(profile.size());
  return mean / static_cast<double>(ranker_count * profile.size());
}

GreedySelection gom_select(const CreditTable& table, const GomConfig& config,
                           std::span<const double> weights, Rng& rng) {
  if (config.candidate_count == 0) throw std::invalid_argument("candidate count must be positive");
  const std::size_t length = checked_length(table, config.length);
  const bool with_bias = config.alpha != 0.0;

  GreedySelection best;
  CandidateSet seen(config.candidate_count);
  DraftState state(table);
  std::vector<std::uint32_t> candidate;
  candidate.reserve(length);
  for (std::size_t k = 0; k < config.candidate_count; ++k) {
    draw_with(state, length, rng, candidate);
    if (!seen.insert(candidate)) continue;
    const ObjectiveTerms terms = evaluate_terms(table, candidate, weights, with_bias);
    const double objective = config.alpha * terms.bias_sum + terms.insensitivity;
    if (seen.size() == 1 || objective < best.objective) {
      best.output = candidate;
      best.terms = terms;
      best.objective = objective;
    }
  }
  best.candidates_evaluated = seen.size();
  return best;
}

namespace {

Ranking to_ranking(const CreditTable& table, std::span<const std::uint32_t> dense) {
  std::vector<ItemId> items;
  items.reserve(dense.size());
  for (std::uint32_t index : dense) items.push_back(table.item(index));
  return Ranking(std::move(items));
}

std::vector<std::uint32_t> to_dense(const CreditTable& table, const Ranking& output) {
  std::vector<std::uint32_t> dense;
  dense.reserve(output.size());
  for (ItemId item : output) {
    auto index = table.index_of(item);
    if (!index) throw std::invalid_argument("output item is not in any input ranking");
    dense.push_back(static_cast<std::uint32_t>(*index));
  }
  return dense;
}

}  // namespace

MultileaveOutcome tdm_multileave(const InputRankingSet& inputs, std::size_t length, Rng& rng) {
  inputs.validate();
  // Team credit does not read the credit matrix; any function builds the index.
  const CreditTable table(inputs, CreditFunction::Inverse);
  std::vector<std::uint32_t> dense;
  MultileaveOutcome outcome;
  outcome.method = Method::TeamDraft;
  tdm_draft(table, checked_length(table, length), rng, dense, outcome.teams);
  outcome.output = to_ranking(table, dense);
  return outcome;
}

MultileaveOutcome tdm_multileave(const InputRankingSet& inputs, std::size_t length,
                                 std::uint64_t seed) {
  Rng rng(seed);
  return tdm_multileave(inputs, length, rng);
}

std::vector<Ranking> candidate_rankings(const InputRankingSet& inputs, std::size_t length,
                                        std::size_t count, Rng& rng) {
  inputs.validate();
  const CreditTable table(inputs, CreditFunction::Inverse);
  const std::size_t clamped = checked_length(table, length);
  CandidateSet seen(count);
  DraftState state(table);
  std::vector<std::uint32_t> candidate;
  std::vector<Ranking> out;
  for (std::size_t k = 0; k < count; ++k) {
    draw_with(state, clamped, rng, candidate);
    if (seen.insert(candidate)) out.push_back(to_ranking(table, candidate));
  }
  return out;
}

std::vector<Ranking> candidate_rankings(const InputRankingSet& inputs, std::size_t length,
                                        std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  return candidate_rankings(inputs, length, count, rng);
}

double insensitivity(const Ranking& output, const InputRankingSet& inputs, CreditFunction credit,
                     const PositionWeight& weight) {
  const CreditTable table(inputs, credit);
  const auto weights = weight.table(output.size());
  return evaluate_terms(table, to_dense(table, output), weights, false).insensitivity;
}

double normalized_insensitivity(const Ranking& output, const InputRankingSet& inputs,
                                CreditFunction credit, const PositionWeight& weight) {
  const CreditTable table(inputs, credit);
  const auto weights = weight.table(output.size());
  return evaluate_terms(table, to_dense(table, output), weights, false).normalized_insensitivity();
}

std::vector<double> bias_profile(const Ranking& output, const InputRankingSet& inputs,
                                 CreditFunction credit) {
  const CreditTable table(inputs, credit);
  return bias_profile(table, to_dense(table, output));
}

MultileaveOutcome gom_multileave(const InputRankingSet& inputs, const GomConfig& config, Rng& rng) {
  inputs.validate();
  const CreditTable table(inputs, config.credit);
  const auto weights = config.weight.table(checked_length(table, config.length));
  GreedySelection selection = gom_select(table, config, weights, rng);
  MultileaveOutcome outcome;
  outcome.method = Method::Greedy;
  outcome.output = to_ranking(table, selection.output);
  outcome.objective_value = selection.objective;
  outcome.candidates_evaluated = selection.candidates_evaluated;
  return outcome;
}

MultileaveOutcome gom_multileave(const InputRankingSet& inputs, const GomConfig& config) {
  Rng rng(config.seed);
  return gom_multileave(inputs, config, rng);
}

}  // namespace multileave
