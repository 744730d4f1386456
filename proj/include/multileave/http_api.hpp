#pragma once

#include <optional>
#include <string>

#include "multileave/service.hpp"

namespace httplib {
class Server;
}

namespace multileave {

/// Routes:
///   GET  /healthz
///   POST /v1/experiments/{eid}/sessions  {ranker_names, rankings, method?, credit?, length?}
///   POST /v1/sessions/{sid}/clicks       {position, idempotency_key?}
///   GET  /v1/experiments/{eid}/results
/// Errors are {"error": message, "field": name} with status 400, 401 or 404.
/// When `token` is set every /v1 request needs "Authorization: Bearer <token>".
void register_routes(httplib::Server& server, ComparisonService& service,
                     std::optional<std::string> token = std::nullopt);

/// Drops the library's default SO_REUSEPORT so a second server on an occupied
/// port fails to bind instead of sharing it.
void use_exclusive_port(httplib::Server& server);

/// Parses a session-creation body; throws ServiceError(400) naming the bad field.
SessionRequest parse_session_request(const std::string& experiment, const std::string& body);

}  // namespace multileave
