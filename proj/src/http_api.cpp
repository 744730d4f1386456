#include "multileave/http_api.hpp"

#include <httplib.h>

namespace multileave {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& field,
                const std::string& message) {
  send_json(res, status, {{"error", message}, {"field", field}});
}

json parse_body(const std::string& body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw ServiceError(400, "body", "request body must be a JSON object");
  }
  return parsed;
}

template <typename T>
T field_as(const json& body, const char* name) {
  try {
    return body.at(name).get<T>();
  } catch (const json::exception&) {
    throw ServiceError(400, name, std::string("missing or mistyped field '") + name + "'");
  }
}

json results_json(const ExperimentResults& results) {
  json totals = json::object();
  for (std::size_t j = 0; j < results.rankers.size(); ++j) {
    totals[results.rankers[j]] = results.totals[j];
  }
  json pairwise = json::object();
  for (std::size_t p = 0; p < results.rankers.size(); ++p) {
    json row = json::object();
    for (std::size_t q = 0; q < results.rankers.size(); ++q) {
      if (p != q) row[results.rankers[q]] = results.pairwise.at(p, q);
    }
    pairwise[results.rankers[p]] = std::move(row);
  }
  return {{"experiment", results.experiment},
          {"totals", totals},
          {"pairwise", pairwise},
          {"sessions", results.sessions},
          {"clicks", results.clicks}};
}

template <typename Handler>
httplib::Server::Handler guarded(const std::optional<std::string>& token, Handler handler) {
  return [token, handler](const httplib::Request& req, httplib::Response& res) {
    if (token && req.get_header_value("Authorization") != "Bearer " + *token) {
      send_error(res, 401, "Authorization", "missing or wrong token");
      return;
    }
    try {
      handler(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.field(), e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, "body", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "", e.what());
    }
  };
}

}  // namespace

SessionRequest parse_session_request(const std::string& experiment, const std::string& body) {
  const json parsed = parse_body(body);
  SessionRequest request;
  request.experiment = experiment;
  request.ranker_names = field_as<std::vector<std::string>>(parsed, "ranker_names");
  request.rankings = field_as<std::vector<std::vector<std::string>>>(parsed, "rankings");
  if (parsed.contains("method")) {
    request.method = parse_method(field_as<std::string>(parsed, "method"));
    if (!request.method) throw ServiceError(400, "method", "method must be TDM or GOM");
  }
  if (parsed.contains("credit")) {
    request.credit = parse_credit_function(field_as<std::string>(parsed, "credit"));
    if (!request.credit) {
      throw ServiceError(400, "credit", "credit must be inverse, negative-rank or personalization");
    }
  }
  if (parsed.contains("length")) {
    const auto length = field_as<long long>(parsed, "length");
    if (length < 1) throw ServiceError(400, "length", "length must be positive");
    request.length = static_cast<std::size_t>(length);
  }
  return request;
}

void use_exclusive_port(httplib::Server& server) {
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
}

void register_routes(httplib::Server& server, ComparisonService& service,
                     std::optional<std::string> token) {
  server.Get("/healthz", [&service](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}, {"sessions", service.session_count()}});
  });

  server.Post(R"(/v1/experiments/([^/]+)/sessions)",
              guarded(token, [&service](const httplib::Request& req, httplib::Response& res) {
                auto request = parse_session_request(req.matches[1], req.body);
                auto created = service.create_session(request);
                json ranking = json::array();
                for (std::size_t i = 0; i < created.ranking.size(); ++i) {
                  ranking.push_back({{"position", i + 1}, {"item", created.ranking[i]}});
                }
                send_json(res, 201, {{"session_id", created.session_id}, {"ranking", ranking}});
              }));

  server.Post(R"(/v1/sessions/([^/]+)/clicks)",
              guarded(token, [&service](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req.body);
                const auto position = field_as<long long>(body, "position");
                if (position < 1) throw ServiceError(400, "position", "position must be >= 1");
                std::string key;
                if (body.contains("idempotency_key")) {
                  key = field_as<std::string>(body, "idempotency_key");
                }
                auto ack = service.record_click(req.matches[1],
                                                static_cast<std::size_t>(position), key);
                send_json(res, 200,
                          {{"credits", ack.credits},
                           {"clicks", ack.clicks},
                           {"duplicate", ack.duplicate}});
              }));

  server.Get(R"(/v1/experiments/([^/]+)/results)",
             guarded(token, [&service](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, results_json(service.results(req.matches[1])));
             }));
}

}  // namespace multileave
