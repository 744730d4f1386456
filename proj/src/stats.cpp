#include "multileave/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace multileave {

CreditVector& CreditVector::operator+=(const CreditVector& other) {
  if (other.size() != size()) throw std::invalid_argument("credit vector size mismatch");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
  return *this;
}

void add_click_credit(const MultileaveOutcome& outcome, const InputRankingSet& inputs,
                      CreditFunction credit_function, std::size_t position, CreditVector& acc) {
  if (position < 1 || position > outcome.output.size()) {
    throw std::out_of_range("click position " + std::to_string(position) + " outside 1.." +
                            std::to_string(outcome.output.size()));
  }
  if (acc.size() != inputs.size()) throw std::invalid_argument("credit vector size mismatch");
  if (outcome.method == Method::TeamDraft) {
    acc[outcome.teams.at(position - 1)] += 1.0;
    return;
  }
  const ItemId item = outcome.output[position - 1];
  for (std::size_t j = 0; j < inputs.size(); ++j) acc[j] += credit(credit_function, item, j, inputs);
}

CreditVector aggregate_click(const MultileaveOutcome& outcome, const InputRankingSet& inputs,
                             CreditFunction credit_function, const ClickEvent& click,
                             CreditVector acc) {
  add_click_credit(outcome, inputs, credit_function, click.position, acc);
  return acc;
}

Preference winner_set(const CreditVector& acc, std::size_t designated) {
  Preference pref;
  pref.order.resize(acc.size());
  std::iota(pref.order.begin(), pref.order.end(), std::size_t{0});
  std::stable_sort(pref.order.begin(), pref.order.end(),
                   [&](std::size_t a, std::size_t b) { return acc[a] > acc[b]; });
  for (std::size_t k = 0; k < acc.size(); ++k) {
    if (k != designated && acc[designated] > acc[k]) ++pref.strict_wins;
  }
  return pref;
}

PairwiseDifferenceTable::PairwiseDifferenceTable(const CreditVector& acc)
    : size_(acc.size()), cells_(acc.size() * acc.size(), 0.0) {
  for (std::size_t p = 0; p < size_; ++p) {
    for (std::size_t q = 0; q < size_; ++q) {
      if (p != q) cells_[p * size_ + q] = acc[p] - acc[q];
    }
  }
}

void PairwiseDifferenceTable::write_csv(std::ostream& out,
                                        std::span<const std::string> names) const {
  if (names.size() != size_) throw std::invalid_argument("one name per ranker required");
  out << "ranker";
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  for (std::size_t p = 0; p < size_; ++p) {
    out << names[p];
    for (std::size_t q = 0; q < size_; ++q) out << ',' << fmt::format("{}", at(p, q));
    out << '\n';
  }
}

PairwiseDifferenceTable pairwise_differences(const CreditVector& acc) {
  return PairwiseDifferenceTable(acc);
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 20000;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) break;
  }
  return h;
}

double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values, double mean) {
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t2));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired t-test needs equal lengths, got " +
                                std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  if (a.size() < 2) throw std::invalid_argument("paired t-test needs at least two pairs");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double mean = mean_of(diff);
  const double var = sample_variance(diff, mean);
  TTestResult result;
  result.df = static_cast<double>(a.size() - 1);
  if (var == 0.0) {
    if (mean == 0.0) return result;
    result.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    result.p = 0.0;
    return result;
  }
  result.t = mean / std::sqrt(var / static_cast<double>(a.size()));
  result.p = student_t_two_sided_p(result.t, result.df);
  return result;
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("Welch t-test needs at least two values per sample");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double mean_a = mean_of(a);
  const double mean_b = mean_of(b);
  const double va = sample_variance(a, mean_a) / na;
  const double vb = sample_variance(b, mean_b) / nb;
  const double se2 = va + vb;
  TTestResult result;
  result.df = na + nb - 2.0;
  if (se2 == 0.0) {
    if (mean_a == mean_b) return result;
    result.t = mean_a > mean_b ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
    result.p = 0.0;
    return result;
  }
  result.t = (mean_a - mean_b) / std::sqrt(se2);
  result.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  result.p = student_t_two_sided_p(result.t, result.df);
  return result;
}

namespace {

Rng curve_rng(std::uint64_t seed, std::size_t users) { return derive_rng(seed, users, 0); }

// Moves `count` uniformly drawn distinct elements to the front of `pool`.
void partial_shuffle(std::vector<std::size_t>& pool, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  }
}

}  // namespace

std::vector<CurvePoint> bootstrap_pvalue_curve(std::span<const PairedRecord> users,
                                               std::span<const std::size_t> user_counts,
                                               const BootstrapOptions& options) {
  if (users.empty()) throw std::invalid_argument("no user records");
  const std::size_t algorithms = users.front().scores.size();
  if (algorithms < 2) throw std::invalid_argument("paired records need at least two algorithms");
  for (const auto& user : users) {
    if (user.scores.size() != algorithms) {
      throw std::invalid_argument("every paired record needs one score per algorithm");
    }
  }
  if (options.resamples == 0) throw std::invalid_argument("resamples must be positive");

  std::vector<CurvePoint> curve;
  std::vector<std::size_t> pool(users.size());
  std::vector<double> a, b;
  for (std::size_t n_users : user_counts) {
    if (n_users < 2 || n_users > users.size()) {
      throw std::invalid_argument("user count " + std::to_string(n_users) + " outside 2.." +
                                  std::to_string(users.size()));
    }
    Rng rng = curve_rng(options.seed, n_users);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    double p_sum = 0.0;
    std::size_t tests = 0;
    for (std::size_t s = 0; s < options.resamples; ++s) {
      partial_shuffle(pool, n_users, rng);
      for (std::size_t x = 0; x < algorithms; ++x) {
        for (std::size_t y = x + 1; y < algorithms; ++y) {
          a.clear();
          b.clear();
          for (std::size_t i = 0; i < n_users; ++i) {
            a.push_back(users[pool[i]].scores[x]);
            b.push_back(users[pool[i]].scores[y]);
          }
          p_sum += paired_t_test(a, b).p;
          ++tests;
        }
      }
    }
    curve.push_back({n_users, p_sum / static_cast<double>(tests)});
  }
  return curve;
}

std::vector<CurvePoint> bootstrap_pvalue_curve(std::span<const AssignedRecord> users,
                                               std::size_t algorithm_count,
                                               std::span<const std::size_t> user_counts,
                                               const BootstrapOptions& options) {
  if (algorithm_count < 2) throw std::invalid_argument("A/B comparison needs two algorithms");
  if (options.resamples == 0) throw std::invalid_argument("resamples must be positive");
  std::vector<std::vector<std::size_t>> groups(algorithm_count);
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (users[i].algorithm >= algorithm_count) {
      throw std::invalid_argument("record assigned to unknown algorithm");
    }
    groups[users[i].algorithm].push_back(i);
  }
  std::size_t smallest = users.size();
  for (const auto& group : groups) smallest = std::min(smallest, group.size());

  std::vector<CurvePoint> curve;
  std::vector<double> a, b;
  for (std::size_t n_users : user_counts) {
    const std::size_t half = n_users / 2;
    if (half < 2 || half > smallest) {
      throw std::invalid_argument("user count " + std::to_string(n_users) +
                                  " needs 2.." + std::to_string(smallest) +
                                  " users per algorithm");
    }
    Rng rng = curve_rng(options.seed, n_users);
    auto pools = groups;
    double p_sum = 0.0;
    std::size_t tests = 0;
    for (std::size_t s = 0; s < options.resamples; ++s) {
      for (auto& pool : pools) partial_shuffle(pool, half, rng);
      for (std::size_t x = 0; x < algorithm_count; ++x) {
        for (std::size_t y = x + 1; y < algorithm_count; ++y) {
          a.clear();
          b.clear();
          for (std::size_t i = 0; i < half; ++i) {
            a.push_back(users[pools[x][i]].score);
            b.push_back(users[pools[y][i]].score);
          }
          p_sum += welch_t_test(a, b).p;
          ++tests;
        }
      }
    }
    curve.push_back({n_users, p_sum / static_cast<double>(tests)});
  }
  return curve;
}

std::optional<std::size_t> crossing_point(std::span<const CurvePoint> curve, double alpha) {
  for (const auto& point : curve) {
    if (point.mean_p < alpha) return point.users;
  }
  return std::nullopt;
}

void write_pvalue_curve_csv(std::ostream& out, std::string_view method,
                            std::span<const CurvePoint> curve, bool header) {
  if (header) out << "N,method,mean_p\n";
  for (const auto& point : curve) out << fmt::format("{},{},{}\n", point.users, method, point.mean_p);
}

double ks_distance_uniform(std::vector<double> sample) {
  if (sample.empty()) return 0.0;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double distance = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = std::clamp(sample[i], 0.0, 1.0);
    distance = std::max(distance, (static_cast<double>(i) + 1.0) / n - x);
    distance = std::max(distance, x - static_cast<double>(i) / n);
  }
  return distance;
}

}  // namespace multileave
