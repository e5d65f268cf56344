#pragma once

#include <string>

#include "setsim/error.hpp"
#include "setsim/session.hpp"

namespace httplib {
class Server;
}

namespace setsim {

// 404 UnknownSession; 409 WrongPhase, NotYourTurn, SessionNotFinished;
// 400 for every other domain error.
int http_status_for(ErrorCode code);

// {"error": {"code": "...", "message": "..."}}
Json error_body(ErrorCode code, const std::string& message);

// POST /sessions, GET /sessions/{id}/state, POST /sessions/{id}/turn,
// POST /sessions/{id}/allocation, POST /sessions/{id}/affinity,
// GET /sessions/{id}/result.
void mount_session_api(httplib::Server& server, SessionManager& manager);

}  // namespace setsim
