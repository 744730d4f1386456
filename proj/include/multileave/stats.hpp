#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "multileave/multileaver.hpp"
#include "multileave/ranking.hpp"

namespace multileave {

/// Per-ranker accumulated click credit.
class CreditVector {
 public:
  CreditVector() = default;
  explicit CreditVector(std::size_t rankers) : values_(rankers, 0.0) {}
  explicit CreditVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  double& operator[](std::size_t j) { return values_[j]; }
  const std::vector<double>& values() const { return values_; }
  std::span<double> span() { return values_; }

  CreditVector& operator+=(const CreditVector& other);
  friend bool operator==(const CreditVector&, const CreditVector&) = default;

 private:
  std::vector<double> values_;
};

struct ClickEvent {
  std::string round;
  std::size_t position = 0;  // 1-based within the shown ranking
  std::optional<std::int64_t> timestamp_ms;
};

/// Adds the credit of a click at 1-based `position` of `outcome.output` to
/// `acc`. Team-draft outcomes credit only the contributing ranker (+1);
/// greedy outcomes add the raw credit delta(O_i, I_j) to every ranker.
/// Throws std::out_of_range for a position outside the output.
void add_click_credit(const MultileaveOutcome& outcome, const InputRankingSet& inputs,
                      CreditFunction credit, std::size_t position, CreditVector& acc);

CreditVector aggregate_click(const MultileaveOutcome& outcome, const InputRankingSet& inputs,
                             CreditFunction credit, const ClickEvent& click, CreditVector acc);

struct Preference {
  std::vector<std::size_t> order;  // rankers by descending credit, stable on ties
  std::size_t strict_wins = 0;     // |{k != designated : acc[designated] > acc[k]}|
};

Preference winner_set(const CreditVector& acc, std::size_t designated);

/// Antisymmetric matrix of credit differences, entry (p, q) = acc[p] - acc[q].
class PairwiseDifferenceTable {
 public:
  PairwiseDifferenceTable() = default;
  explicit PairwiseDifferenceTable(const CreditVector& acc);

  std::size_t size() const { return size_; }
  double at(std::size_t row, std::size_t col) const { return cells_[row * size_ + col]; }

  /// Header row and column carry the ranker names.
  void write_csv(std::ostream& out, std::span<const std::string> names) const;

 private:
  std::size_t size_ = 0;
  std::vector<double> cells_;
};

PairwiseDifferenceTable pairwise_differences(const CreditVector& acc);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
double student_t_two_sided_p(double t, double df);

/// Paired t-test on a - b. All-zero differences give p = 1.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Welch's unequal-variance t-test.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Bootstrap subsampling of p-values over growing user counts.

/// One user in a within-user (multileaving) comparison: a score per algorithm.
struct PairedRecord {
  std::vector<double> scores;
};

/// One user in a between-user (A/B) comparison.
struct AssignedRecord {
  std::size_t algorithm = 0;
  double score = 0.0;
};

struct BootstrapOptions {
  /// Subsamples drawn per user count.
  std::size_t resamples = 50;
  std::uint64_t seed = 0;
};

struct CurvePoint {
  std::size_t users = 0;
  double mean_p = 1.0;
};

/// For each N: draws `resamples` subsamples of N distinct users, runs a paired
/// t-test per algorithm pair, and averages p over pairs and subsamples.
/// Throws std::invalid_argument when N exceeds the population or is below 2.
std::vector<CurvePoint> bootstrap_pvalue_curve(std::span<const PairedRecord> users,
                                               std::span<const std::size_t> user_counts,
                                               const BootstrapOptions& options);

/// A/B variant: N/2 users per algorithm of each pair, Welch t-test.
std::vector<CurvePoint> bootstrap_pvalue_curve(std::span<const AssignedRecord> users,
                                               std::size_t algorithm_count,
                                               std::span<const std::size_t> user_counts,
                                               const BootstrapOptions& options);

/// First user count with mean p below `alpha`, if any.
std::optional<std::size_t> crossing_point(std::span<const CurvePoint> curve, double alpha = 0.05);

/// Columns: N,method,mean_p. Writes the header when `header` is set.
void write_pvalue_curve_csv(std::ostream& out, std::string_view method,
                            std::span<const CurvePoint> curve, bool header = true);

/// Kolmogorov-Smirnov distance of a sample to Uniform(0, 1).
double ks_distance_uniform(std::vector<double> sample);

}  // namespace multileave
