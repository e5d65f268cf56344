#include "setsim/http_api.hpp"

#include <httplib.h>

namespace setsim {
namespace {

using Handler = std::function<Json(const httplib::Request&)>;

void respond(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

httplib::Server::Handler wrap(Handler handler, int ok_status = 200) {
    return [handler = std::move(handler), ok_status](const httplib::Request& req, httplib::Response& res) {
        try {
            respond(res, ok_status, handler(req));
        } catch (const Error& e) {
            respond(res, http_status_for(e.code()), error_body(e.code(), e.what()));
        } catch (const nlohmann::json::exception& e) {
            respond(res, 400, error_body(ErrorCode::InvalidDecision, std::string("bad JSON: ") + e.what()));
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(Json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump(), "application/json");
        }
    };
}

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    return Json::parse(req.body);
}

}  // namespace

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownSession: return 404;
        case ErrorCode::WrongPhase:
        case ErrorCode::NotYourTurn:
        case ErrorCode::SessionNotFinished: return 409;
        default: return 400;
    }
}

Json error_body(ErrorCode code, const std::string& message) {
    return Json{{"error", {{"code", std::string(to_string(code))}, {"message", message}}}};
}

void mount_session_api(httplib::Server& server, SessionManager& manager) {
    server.Post("/sessions", wrap(
                                 [&manager](const httplib::Request& req) {
                                     const auto body = parse_body(req);
                                     SessionRequest request;
                                     request.preset = body.value("preset", request.preset);
                                     if (body.contains("options")) request.options = body.at("options");
                                     return manager.create(request);
                                 },
                                 201));
    server.Get(R"(/sessions/([^/]+)/state)",
               wrap([&manager](const httplib::Request& req) { return manager.state(req.matches[1]); }));
    server.Get(R"(/sessions/([^/]+)/result)",
               wrap([&manager](const httplib::Request& req) { return manager.result(req.matches[1]); }));
    server.Post(R"(/sessions/([^/]+)/turn)", wrap([&manager](const httplib::Request& req) {
                    return manager.submit_turn(req.matches[1], parse_body(req));
                }));
    server.Post(R"(/sessions/([^/]+)/allocation)", wrap([&manager](const httplib::Request& req) {
                    return manager.submit_allocation(req.matches[1], parse_body(req));
                }));
    server.Post(R"(/sessions/([^/]+)/affinity)", wrap([&manager](const httplib::Request& req) {
                    return manager.submit_affinity(req.matches[1], parse_body(req));
                }));
}

}  // namespace setsim
