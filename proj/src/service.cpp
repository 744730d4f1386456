#include "multileave/service.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <unordered_set>

#include <fmt/format.h>
#include <unistd.h>

namespace multileave {

using nlohmann::json;

FileEventLog::FileEventLog(std::string path, bool sync) : path_(std::move(path)), sync_(sync) {
  file_ = std::fopen(path_.c_str(), "ab");
  if (file_ == nullptr) {
    throw std::runtime_error(fmt::format("cannot open event log '{}': {}", path_,
                                         std::strerror(errno)));
  }
}

FileEventLog::~FileEventLog() {
  if (file_ != nullptr) std::fclose(file_);
}

void FileEventLog::append(const json& event) {
  const std::string line = event.dump() + '\n';
  std::lock_guard lock(mutex_);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw std::runtime_error(fmt::format("write to event log '{}' failed", path_));
  }
  if (sync_) ::fsync(::fileno(file_));
}

void FileEventLog::flush() {
  std::lock_guard lock(mutex_);
  std::fflush(file_);
  ::fsync(::fileno(file_));
}

void FileEventLog::replay(const std::function<void(const json&)>& visit) const {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    json event = json::parse(line, nullptr, false);
    if (event.is_discarded()) {
      // A torn final line is what a crash mid-write leaves behind.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw std::runtime_error(fmt::format("{}:{}: malformed event", path_, number));
    }
    visit(event);
  }
}

void MemoryEventLog::append(const json& event) {
  std::string line = event.dump();
  std::lock_guard lock(mutex_);
  lines_.push_back(std::move(line));
}

void MemoryEventLog::replay(const std::function<void(const json&)>& visit) const {
  for (const auto& line : lines()) visit(json::parse(line));
}

std::vector<std::string> MemoryEventLog::lines() const {
  std::lock_guard lock(mutex_);
  return lines_;
}

struct ComparisonService::Session {
  std::mutex mutex;
  std::string id;
  std::string experiment;
  std::vector<std::string> ranker_names;
  std::vector<std::string> item_names;  // ItemId i is item_names[i]
  InputRankingSet inputs;
  MultileaveOutcome outcome;
  CreditFunction credit = CreditFunction::Personalization;
  CreditVector acc;
  std::size_t clicks = 0;
  std::unordered_set<std::string> keys;
  std::int64_t last_ms = 0;
  std::shared_ptr<Experiment> aggregate;
  std::vector<std::size_t> slots;  // experiment column of each ranker
};

struct ComparisonService::Experiment {
  std::mutex mutex;
  std::vector<std::string> rankers;
  std::unordered_map<std::string, std::size_t> columns;
  std::vector<double> totals;
  std::size_t sessions = 0;
  std::size_t clicks = 0;

  std::vector<std::size_t> join(const std::vector<std::string>& names) {
    std::lock_guard lock(mutex);
    std::vector<std::size_t> slots;
    for (const auto& name : names) {
      auto [it, inserted] = columns.emplace(name, rankers.size());
      if (inserted) {
        rankers.push_back(name);
        totals.push_back(0.0);
      }
      slots.push_back(it->second);
    }
    ++sessions;
    return slots;
  }
};

namespace {

constexpr std::string_view kCreatedEvent = "session_created";
constexpr std::string_view kClickEvent = "click";

// Item strings become ItemIds in order of first appearance.
InputRankingSet intern_rankings(const std::vector<std::vector<std::string>>& rankings,
                                std::vector<std::string>& names) {
  std::unordered_map<std::string, ItemId> ids;
  std::vector<Ranking> out;
  out.reserve(rankings.size());
  for (std::size_t j = 0; j < rankings.size(); ++j) {
    const auto& ranking = rankings[j];
    const std::string field = fmt::format("rankings[{}]", j);
    if (ranking.empty()) throw ServiceError(400, field, "ranking is empty");
    std::vector<ItemId> items;
    items.reserve(ranking.size());
    std::unordered_set<ItemId> seen;
    for (const auto& name : ranking) {
      auto [it, inserted] = ids.emplace(name, names.size());
      if (inserted) names.push_back(name);
      if (!seen.insert(it->second).second) {
        throw ServiceError(400, field, fmt::format("duplicate item '{}'", name));
      }
      items.push_back(it->second);
    }
    out.emplace_back(std::move(items));
  }
  return InputRankingSet(std::move(out));
}

}  // namespace

ComparisonService::ComparisonService(ServiceConfig config, std::shared_ptr<EventLog> log)
    : config_(std::move(config)), log_(std::move(log)) {
  if (!log_) throw std::invalid_argument("event log required");
  if (config_.candidate_count == 0) throw std::invalid_argument("candidate count must be positive");
  rng_.seed(config_.seed != 0 ? config_.seed
                              : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                                    std::random_device{}());
  log_->replay([this](const json& event) {
    if (event.value("v", 0) != kEventSchemaVersion) {
      throw std::runtime_error(fmt::format("unsupported event schema: {}", event.dump()));
    }
    const std::string type = event.at("type");
    if (type == kCreatedEvent) {
      apply_created(event);
    } else if (type == kClickEvent) {
      apply_click(event);
    } else {
      throw std::runtime_error("unknown event type '" + type + "'");
    }
  });
  evict_idle();
}

ComparisonService::~ComparisonService() {
  try {
    log_->flush();
  } catch (...) {
  }
}

std::int64_t ComparisonService::now_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             config_.clock().time_since_epoch())
      .count();
}

std::string ComparisonService::next_session_id() {
  std::lock_guard lock(rng_mutex_);
  while (true) {
    std::string id = fmt::format("s{:016x}", rng_());
    std::shared_lock read(sessions_mutex_);
    if (!sessions_.contains(id)) return id;
  }
}

std::shared_ptr<ComparisonService::Experiment> ComparisonService::experiment_for(
    const std::string& id) {
  {
    std::shared_lock read(experiments_mutex_);
    auto it = experiments_.find(id);
    if (it != experiments_.end()) return it->second;
  }
  std::unique_lock write(experiments_mutex_);
  auto& slot = experiments_[id];
  if (!slot) slot = std::make_shared<Experiment>();
  return slot;
}

std::shared_ptr<ComparisonService::Session> ComparisonService::find_session(
    const std::string& id) const {
  std::shared_lock read(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

SessionCreated ComparisonService::create_session(const SessionRequest& request) {
  if (request.experiment.empty()) throw ServiceError(400, "experiment", "experiment id is empty");
  const std::size_t n = request.rankings.size();
  if (n < 2) {
    throw ServiceError(400, "rankings", fmt::format("need at least two rankings, got {}", n));
  }
  if (request.ranker_names.size() != n) {
    throw ServiceError(400, "ranker_names",
                       fmt::format("expected {} names, got {}", n, request.ranker_names.size()));
  }
  std::unordered_set<std::string> distinct(request.ranker_names.begin(),
                                           request.ranker_names.end());
  if (distinct.size() != n) throw ServiceError(400, "ranker_names", "names must be distinct");
  if (request.length == 0) throw ServiceError(400, "length", "length must be positive");

  auto session = std::make_shared<Session>();
  session->experiment = request.experiment;
  session->ranker_names = request.ranker_names;
  session->inputs = intern_rankings(request.rankings, session->item_names);
  session->credit = request.credit.value_or(config_.default_credit);
  session->acc = CreditVector(n);

  std::uint64_t seed = 0;
  {
    std::lock_guard lock(rng_mutex_);
    seed = rng_();
  }
  Rng rng(seed);
  if (request.method.value_or(config_.default_method) == Method::TeamDraft) {
    session->outcome = tdm_multileave(session->inputs, request.length, rng);
  } else {
    GomConfig gom;
    gom.candidate_count = config_.candidate_count;
    gom.alpha = config_.alpha;
    gom.credit = session->credit;
    gom.length = request.length;
    session->outcome = gom_multileave(session->inputs, gom, rng);
  }
  session->id = next_session_id();
  session->last_ms = now_ms();

  SessionCreated created{session->id, {}};
  for (ItemId item : session->outcome.output) created.ranking.push_back(session->item_names[item]);

  json event = {{"v", kEventSchemaVersion},
                {"type", kCreatedEvent},
                {"ts", session->last_ms},
                {"session", session->id},
                {"experiment", session->experiment},
                {"rankers", session->ranker_names},
                {"rankings", request.rankings},
                {"method", to_string(session->outcome.method)},
                {"credit", to_string(session->credit)},
                {"output", created.ranking}};
  if (session->outcome.method == Method::TeamDraft) event["teams"] = session->outcome.teams;
  log_->append(event);

  session->aggregate = experiment_for(session->experiment);
  session->slots = session->aggregate->join(session->ranker_names);
  std::unique_lock write(sessions_mutex_);
  sessions_.emplace(session->id, session);
  return created;
}

void ComparisonService::apply_created(const json& event) {
  auto session = std::make_shared<Session>();
  session->id = event.at("session");
  session->experiment = event.at("experiment");
  session->ranker_names = event.at("rankers").get<std::vector<std::string>>();
  session->inputs = intern_rankings(
      event.at("rankings").get<std::vector<std::vector<std::string>>>(), session->item_names);
  session->credit = parse_credit_function(event.at("credit").get<std::string>()).value();
  session->acc = CreditVector(session->inputs.size());
  session->last_ms = event.at("ts");

  std::unordered_map<std::string, ItemId> ids;
  for (ItemId i = 0; i < session->item_names.size(); ++i) ids.emplace(session->item_names[i], i);
  std::vector<ItemId> output;
  for (const auto& name : event.at("output")) output.push_back(ids.at(name.get<std::string>()));
  session->outcome.output = Ranking(std::move(output));
  session->outcome.method = parse_method(event.at("method").get<std::string>()).value();
  if (event.contains("teams")) {
    session->outcome.teams = event.at("teams").get<std::vector<std::size_t>>();
  }

  session->aggregate = experiment_for(session->experiment);
  session->slots = session->aggregate->join(session->ranker_names);
  std::unique_lock write(sessions_mutex_);
  sessions_[session->id] = session;
}

ClickAck ComparisonService::record_click(const std::string& session_id, std::size_t position,
                                         const std::string& idempotency_key) {
  auto session = find_session(session_id);
  if (!session) throw ServiceError(404, "session_id", "unknown session '" + session_id + "'");

  std::lock_guard lock(session->mutex);
  if (!idempotency_key.empty() && session->keys.contains(idempotency_key)) {
    return {session->acc.values(), session->clicks, true};
  }
  const std::size_t shown = session->outcome.output.size();
  if (position < 1 || position > shown) {
    throw ServiceError(400, "position",
                       fmt::format("position {} outside 1..{}", position, shown));
  }
  CreditVector delta(session->acc.size());
  add_click_credit(session->outcome, session->inputs, session->credit, position, delta);

  const std::int64_t ts = now_ms();
  json event = {{"v", kEventSchemaVersion}, {"type", kClickEvent}, {"ts", ts},
                {"session", session_id},    {"position", position}};
  if (!idempotency_key.empty()) event["key"] = idempotency_key;
  log_->append(event);

  session->acc += delta;
  ++session->clicks;
  session->last_ms = ts;
  if (!idempotency_key.empty()) session->keys.insert(idempotency_key);
  {
    auto& experiment = *session->aggregate;
    std::lock_guard agg(experiment.mutex);
    for (std::size_t j = 0; j < delta.size(); ++j) experiment.totals[session->slots[j]] += delta[j];
    ++experiment.clicks;
  }
  return {session->acc.values(), session->clicks, false};
}

void ComparisonService::apply_click(const json& event) {
  auto session = find_session(event.at("session"));
  if (!session) {
    throw std::runtime_error("click for unknown session in log: " + event.dump());
  }
  const std::string key = event.value("key", std::string{});
  if (!key.empty() && session->keys.contains(key)) return;
  CreditVector delta(session->acc.size());
  add_click_credit(session->outcome, session->inputs, session->credit,
                   event.at("position").get<std::size_t>(), delta);
  session->acc += delta;
  ++session->clicks;
  session->last_ms = event.at("ts");
  if (!key.empty()) session->keys.insert(key);
  auto& experiment = *session->aggregate;
  for (std::size_t j = 0; j < delta.size(); ++j) experiment.totals[session->slots[j]] += delta[j];
  ++experiment.clicks;
}

ExperimentResults ComparisonService::results(const std::string& experiment_id) const {
  std::shared_ptr<Experiment> experiment;
  {
    std::shared_lock read(experiments_mutex_);
    auto it = experiments_.find(experiment_id);
    if (it != experiments_.end()) experiment = it->second;
  }
  if (!experiment) {
    throw ServiceError(404, "experiment", "unknown experiment '" + experiment_id + "'");
  }
  ExperimentResults out;
  out.experiment = experiment_id;
  {
    std::lock_guard lock(experiment->mutex);
    out.rankers = experiment->rankers;
    out.totals = experiment->totals;
    out.sessions = experiment->sessions;
    out.clicks = experiment->clicks;
  }
  out.pairwise = PairwiseDifferenceTable(CreditVector(out.totals));
  return out;
}

std::optional<std::vector<double>> ComparisonService::session_credits(
    const std::string& session_id) const {
  auto session = find_session(session_id);
  if (!session) return std::nullopt;
  std::lock_guard lock(session->mutex);
  return session->acc.values();
}

std::size_t ComparisonService::evict_idle() {
  const std::int64_t cutoff =
      now_ms() - std::chrono::duration_cast<std::chrono::milliseconds>(config_.session_ttl).count();
  std::unique_lock write(sessions_mutex_);
  return std::erase_if(sessions_, [&](const auto& entry) {
    std::lock_guard lock(entry.second->mutex);
    return entry.second->last_ms < cutoff;
  });
}

std::size_t ComparisonService::session_count() const {
  std::shared_lock read(sessions_mutex_);
  return sessions_.size();
}

}  // namespace multileave
