#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace multileave::cli {

/// Bad flag values; reported with exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimOptions {
  std::vector<std::string> methods;
  std::string credit = "personalization";
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::size_t candidates = 10;
  std::size_t numeval = 100;
  std::size_t numclick = 100;
  double click_bias = 80.0;
  bool literal_win_rule = false;
  bool identical_inputs = false;
  bool per_run = false;
};

struct SweepRankersOptions {
  SimOptions sim{.methods = {"TDM", "GOM-I", "GOM-P"}};
  std::size_t n_min = 2;
  std::size_t n_max = 20;
  std::size_t length = 10;
};

struct SweepLengthOptions {
  SimOptions sim{.methods = {"TDM", "GOM-I", "GOM-P"}};
  std::size_t rankers = 3;
  std::size_t l_min = 5;
  std::size_t l_max = 195;
  std::size_t length_step = 10;
};

struct InsensitivityOptions {
  SimOptions sim{.methods = {"GOM-I", "GOM-P"}};
  std::string axis = "both";  // rankers, length or both
  std::size_t n_min = 2;
  std::size_t n_max = 20;
  std::size_t length = 10;
  std::size_t rankers = 3;
  std::size_t l_min = 5;
  std::size_t l_max = 195;
  std::size_t length_step = 10;
};

struct BiasOptions {
  std::size_t rankers = 5;
  std::size_t length = 10;
  std::size_t candidates = 10;
  double alpha = 0.0;
  std::size_t generations = 10000;
  std::uint64_t seed = 0;
  bool identical_inputs = false;
};

struct AlphaStudyOptions {
  SimOptions sim{.methods = {"GOM-P"}};
  std::size_t rankers = 5;
  std::size_t length = 10;
  std::vector<double> alphas{0.0, 1.0, 1000.0};
};

struct PvalueCompareOptions {
  std::size_t algorithms = 5;
  std::size_t users = 8000;
  std::size_t length = 10;
  std::size_t candidates = 10;
  double click_bias = 20.0;
  double effect = 2.0;
  double base_ctr = 0.5;
  double heterogeneity = 1.0;
  double mismatch_click_ratio = 0.5;
  double activity_shape = 1.5;
  std::size_t max_impressions = 200;
  /// Algorithm whose A/B users are less active; -1 disables.
  long long group_bias_algorithm = -1;
  double group_bias_factor = 0.5;
  std::vector<std::size_t> grid;  // empty: default grid up to `users`
  std::size_t resamples = 50;
  std::uint64_t seed = 0;
};

/// Where a command writes: the CSV plus sibling files sharing its stem.
struct OutputPaths {
  std::filesystem::path csv;

  std::filesystem::path manifest() const;
  std::filesystem::path summary() const;
};

// Each command writes its CSV and manifest and returns the manifest.
nlohmann::json run_sweep_rankers(const SweepRankersOptions& o, const OutputPaths& out,
                                 std::size_t threads);
nlohmann::json run_sweep_length(const SweepLengthOptions& o, const OutputPaths& out,
                                std::size_t threads);
nlohmann::json run_insensitivity(const InsensitivityOptions& o, const OutputPaths& out,
                                 std::size_t threads);
nlohmann::json run_bias(const BiasOptions& o, const OutputPaths& out, std::size_t threads);
nlohmann::json run_alpha_study(const AlphaStudyOptions& o, const OutputPaths& out,
                               std::size_t threads);
nlohmann::json run_pvalue_compare(const PvalueCompareOptions& o, const OutputPaths& out,
                                  std::size_t threads);

/// Re-runs the command recorded in a manifest, writing to `out`.
nlohmann::json replay_manifest(const nlohmann::json& manifest, const OutputPaths& out,
                               std::size_t threads);

std::vector<std::size_t> default_pvalue_grid(std::size_t users);

std::size_t default_threads();

}  // namespace multileave::cli
