#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "multileave/multileaver.hpp"
#include "multileave/stats.hpp"

namespace multileave {

/// Rejected request; `status` is the HTTP status to report (400 or 404).
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string field, const std::string& message)
      : std::runtime_error(message), status_(status), field_(std::move(field)) {}

  int status() const { return status_; }
  const std::string& field() const { return field_; }

 private:
  int status_;
  std::string field_;
};

/// Append-only event store. append() returns once the record is durable.
class EventLog {
 public:
  virtual ~EventLog() = default;
  virtual void append(const nlohmann::json& event) = 0;
  virtual void replay(const std::function<void(const nlohmann::json&)>& visit) const = 0;
  virtual void flush() {}
};

/// One JSON object per line. Every append is flushed (and fsynced when
/// `sync` is set) before it returns.
class FileEventLog : public EventLog {
 public:
  /// Throws std::runtime_error when the file cannot be opened for append.
  explicit FileEventLog(std::string path, bool sync = false);
  ~FileEventLog() override;

  void append(const nlohmann::json& event) override;
  void replay(const std::function<void(const nlohmann::json&)>& visit) const override;
  void flush() override;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  bool sync_;
  std::FILE* file_ = nullptr;
  std::mutex mutex_;
};

class MemoryEventLog : public EventLog {
 public:
  void append(const nlohmann::json& event) override;
  void replay(const std::function<void(const nlohmann::json&)>& visit) const override;

  std::vector<std::string> lines() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> lines_;
};

inline constexpr int kEventSchemaVersion = 1;

using Clock = std::function<std::chrono::system_clock::time_point()>;

struct ServiceConfig {
  Method default_method = Method::Greedy;
  CreditFunction default_credit = CreditFunction::Personalization;
  std::size_t candidate_count = 10;
  double alpha = 0.0;
  std::chrono::seconds session_ttl = std::chrono::hours(24);
  /// Seeds session ids and ranking construction; 0 draws from std::random_device.
  std::uint64_t seed = 0;
  Clock clock = [] { return std::chrono::system_clock::now(); };
};

struct SessionRequest {
  std::string experiment;
  std::vector<std::string> ranker_names;
  std::vector<std::vector<std::string>> rankings;
  std::optional<Method> method;
  std::optional<CreditFunction> credit;
  std::size_t length = 10;
};

struct SessionCreated {
  std::string session_id;
  std::vector<std::string> ranking;
};

struct ClickAck {
  std::vector<double> credits;
  std::size_t clicks = 0;
  bool duplicate = false;
};

struct ExperimentResults {
  std::string experiment;
  std::vector<std::string> rankers;
  std::vector<double> totals;
  std::size_t sessions = 0;
  std::size_t clicks = 0;
  PairwiseDifferenceTable pairwise;
};

/// Session store with click aggregation. Every accepted mutation is appended
/// to the event log before it is applied, and the constructor rebuilds all
/// state from the log.
class ComparisonService {
 public:
  ComparisonService(ServiceConfig config, std::shared_ptr<EventLog> log);
  ~ComparisonService();

  SessionCreated create_session(const SessionRequest& request);

  /// position is 1-based. An idempotency key seen before for this session
  /// returns the current vector without counting the click again.
  ClickAck record_click(const std::string& session_id, std::size_t position,
                        const std::string& idempotency_key = {});

  ExperimentResults results(const std::string& experiment) const;

  /// Credit vector of a live session.
  std::optional<std::vector<double>> session_credits(const std::string& session_id) const;

  /// Drops sessions idle for longer than the TTL. Their credit stays in the
  /// experiment totals. Returns the number evicted.
  std::size_t evict_idle();

  std::size_t session_count() const;
  const ServiceConfig& config() const { return config_; }

 private:
  struct Session;
  struct Experiment;

  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::shared_ptr<Experiment> experiment_for(const std::string& id);
  void apply_created(const nlohmann::json& event);
  void apply_click(const nlohmann::json& event);
  std::string next_session_id();
  std::int64_t now_ms() const;

  ServiceConfig config_;
  std::shared_ptr<EventLog> log_;

  mutable std::shared_mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  mutable std::shared_mutex experiments_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Experiment>> experiments_;

  std::mutex rng_mutex_;
  Rng rng_;
};

}  // namespace multileave
