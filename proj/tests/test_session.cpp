#include <doctest.h>

#include <httplib.h>

#include <filesystem>

#include "setsim/error.hpp"
#include "setsim/http_api.hpp"
#include "setsim/json_codec.hpp"
#include "setsim/runner.hpp"
#include "setsim/scoring.hpp"
#include "setsim/session.hpp"

using namespace setsim;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::ConfigError;
}

struct Reply {
    int status{0};
    Json body;
};

class ApiServer {
public:
    explicit ApiServer(SessionServiceOptions options = {}) : manager_(std::move(options)) {
        mount_session_api(server_, manager_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ApiServer() {
        server_.stop();
        thread_.join();
    }

    Reply post(const std::string& path, const Json& body) { return wrap(client().Post(path, body.dump(), "application/json")); }
    Reply post_raw(const std::string& path, const std::string& body) { return wrap(client().Post(path, body, "application/json")); }
    Reply get(const std::string& path) { return wrap(client().Get(path)); }
    SessionManager& manager() { return manager_; }

private:
    httplib::Client client() { return httplib::Client("127.0.0.1", port_); }
    static Reply wrap(const httplib::Result& r) {
        REQUIRE(r);
        Reply out{r->status, Json()};
        if (!r->body.empty()) out.body = Json::parse(r->body);
        return out;
    }

    SessionManager manager_;
    httplib::Server server_;
    int port_{0};
    std::thread thread_;
};

std::string error_code(const Reply& r) { return r.body.at("error").at("code").get<std::string>(); }

// Plays the human seat like pass-bot until the session ends.
void play_passively(ApiServer& api, const std::string& id) {
    for (int guard = 0; guard < 1000; ++guard) {
        const auto state = api.get("/sessions/" + id + "/state").body;
        const auto phase = state.at("phase").get<std::string>();
        if (phase == "finished") return;
        REQUIRE(state.at("awaiting_you").get<bool>());
        Reply r;
        if (phase == "awaiting_turn") r = api.post("/sessions/" + id + "/turn", Json{{"utterance", ""}, {"actions", Json::array()}});
        else if (phase == "awaiting_allocation") r = api.post("/sessions/" + id + "/allocation", Json{{"rationale", "keeping everything"}});
        else if (phase == "awaiting_affinity") r = api.post("/sessions/" + id + "/affinity", Json::object());
        else FAIL("unexpected phase " << phase);
        REQUIRE(r.status == 200);
    }
    FAIL("session did not finish");
}

Json strip_identity(const EventRecord& e) {
    auto j = to_json(e);
    j.erase("run_id");
    if (e.kind == EventKind::RunStart) {
        j["payload"].erase("roster");
        for (auto& a : j["payload"]["config"]["agents"]) a.erase("controller");
    }
    return j;
}

}  // namespace

TEST_CASE("presets and options build valid configs") {
    const auto study = session_config({"human-study", Json::object()});
    CHECK(study.rounds == 10);
    CHECK(study.initial_allocation_mode == AllocationMode::SpecializedOnly);
    CHECK(study.agents[2].controller.kind == ControllerKind::Human);
    CHECK(study.agents[0].controller == parse_controller("scripted:honest-reciprocator"));

    const auto trust = session_config({"trust-violation", Json::object()});
    CHECK(trust.rounds == 20);
    CHECK(trust.agents[0].controller == parse_controller("scripted:trust-violator@10"));
    const auto trust7 = session_config({"trust-violation", Json{{"violation_round", 7}, {"human", "Alice"}}});
    CHECK(trust7.agents[0].controller.kind == ControllerKind::Human);
    CHECK(trust7.agents[1].controller == parse_controller("scripted:trust-violator@7"));

    CHECK(code_of([] { session_config({"solo", Json::object()}); }) == ErrorCode::InvalidPreset);
    CHECK(code_of([] { session_config({"human-study", Json{{"colour", "blue"}}}); }) == ErrorCode::InvalidPreset);
    CHECK(code_of([] { session_config({"human-study", Json{{"rounds", 0}}}); }) == ErrorCode::InvalidPreset);
    CHECK(code_of([] {
              session_config({"human-study", Json{{"controllers", {"human", "human", "scripted:pass-bot"}}}});
          }) == ErrorCode::InvalidPreset);
    CHECK(code_of([] {
              session_config({"human-study", Json{{"controllers", {"scripted:pass-bot", "scripted:pass-bot", "scripted:pass-bot"}}}});
          }) == ErrorCode::InvalidPreset);
}

TEST_CASE("error codes map to HTTP statuses") {
    CHECK(http_status_for(ErrorCode::UnknownSession) == 404);
    CHECK(http_status_for(ErrorCode::WrongPhase) == 409);
    CHECK(http_status_for(ErrorCode::NotYourTurn) == 409);
    CHECK(http_status_for(ErrorCode::SessionNotFinished) == 409);
    CHECK(http_status_for(ErrorCode::OverCommit) == 400);
    CHECK(http_status_for(ErrorCode::InvalidScore) == 400);
    CHECK(http_status_for(ErrorCode::InvalidPreset) == 400);
    CHECK(error_body(ErrorCode::WrongPhase, "no")["error"]["code"] == "WrongPhase");
}

TEST_CASE("a human-study session over HTTP") {
    ApiServer api;
    const auto created = api.post("/sessions", Json{{"preset", "human-study"}});
    REQUIRE(created.status == 201);
    const auto id = created.body.at("session_id").get<std::string>();
    const auto base = "/sessions/" + id;

    auto state = api.get(base + "/state");
    CHECK(state.status == 200);
    CHECK(state.body["human"] == "Carol");
    CHECK(state.body["phase"] == "awaiting_turn");
    CHECK(state.body["turn_owner"] == "Carol");
    CHECK(state.body["awaiting_you"] == true);
    CHECK(state.body["round"] == 1);
    // Reads are idempotent.
    CHECK(api.get(base + "/state").body == state.body);

    // Alice and Bob have offered Carol swaps; nothing private leaks.
    const auto text = state.body.dump();
    CHECK(state.body["proposals"].size() >= 2);
    CHECK(text.find("rationale") == std::string::npos);
    CHECK(text.find("even swap toward complete sets") == std::string::npos);
    CHECK(text.find("beliefs") == std::string::npos);
    CHECK(text.find("intentions") == std::string::npos);
    CHECK_FALSE(state.body.contains("affinity"));
    CHECK(state.body["your_affinity"].size() == 2);

    // Wrong phase, bad input, unknown ids.
    auto r = api.post(base + "/allocation", Json{{"outgoing", Json::object()}});
    CHECK(r.status == 409);
    CHECK(error_code(r) == "WrongPhase");
    r = api.post(base + "/affinity", Json{{"scores", {{"Alice", 4}}}});
    CHECK(r.status == 409);
    r = api.post(base + "/turn", Json{{"actions", {{{"type", "ACCEPT"}, {"proposal_id", "R1-P99"}}}}});
    CHECK(r.status == 400);
    CHECK(error_code(r) == "UnknownProposal");
    r = api.post(base + "/turn", Json{{"actions", {{{"type", "PROPOSE"}, {"to", "Dave"}, {"give", {{"C", 1}}}, {"receive", {{"A", 1}}}}}}});
    CHECK(r.status == 400);
    CHECK(error_code(r) == "UnknownAgent");
    r = api.post_raw(base + "/turn", "{broken");
    CHECK(r.status == 400);
    CHECK(api.get("/sessions/nope/state").status == 404);
    CHECK(error_code(api.get("/sessions/nope/state")) == "UnknownSession");
    r = api.get(base + "/result");
    CHECK(r.status == 409);
    CHECK(error_code(r) == "SessionNotFinished");
    // Rejected requests leave the session where it was.
    CHECK(api.get(base + "/state").body == state.body);

    // Accept every swap offered to Carol.
    Json actions = Json::array();
    for (const auto& p : state.body["proposals"]) {
        if (p["counterpart"] == "Carol" && p["status"] == "pending") actions.push_back({{"type", "ACCEPT"}, {"proposal_id", p["proposal_id"]}});
    }
    r = api.post(base + "/turn", Json{{"utterance", "Deal."}, {"actions", actions}});
    REQUIRE(r.status == 200);

    // Finish negotiation by passing, then over-commit once and get the hint.
    while ((state = api.get(base + "/state")).body["phase"] == "awaiting_turn") {
        REQUIRE(api.post(base + "/turn", Json{{"actions", Json::array()}}).status == 200);
    }
    REQUIRE(state.body["phase"] == "awaiting_allocation");
    CHECK(state.body["promises"]["you_owe"].size() == 2);
    r = api.post(base + "/allocation", Json{{"outgoing", {{"Alice", {{"C", 1000}}}}}});
    CHECK(r.status == 400);
    CHECK(error_code(r) == "OverCommit");
    CHECK(r.body["error"]["message"].get<std::string>().find("you hold") != std::string::npos);

    // Honor the deals.
    r = api.post(base + "/allocation", Json{{"outgoing", state.body["promises"]["you_owe"]}, {"rationale", "secret plan"}});
    REQUIRE(r.status == 200);
    CHECK(r.body["phase"] == "awaiting_affinity");
    CHECK(r.body.dump().find("secret plan") == std::string::npos);
    CHECK(r.body["last_outcome"]["breaches"].size() >= 4);

    r = api.post(base + "/affinity", Json{{"scores", {{"Alice", 6}}}});
    CHECK(r.status == 400);
    CHECK(error_code(r) == "InvalidScore");
    r = api.post(base + "/affinity", Json{{"scores", {{"Carol", 4}}}});
    CHECK(r.status == 400);
    r = api.post(base + "/affinity", Json{{"scores", {{"Alice", 5}, {"Bob", 4}}}});
    REQUIRE(r.status == 200);
    CHECK(r.body["round"] == 2);
    CHECK(r.body["your_affinity"]["Alice"] == 5);

    play_passively(api, id);
    const auto result = api.get(base + "/result");
    REQUIRE(result.status == 200);
    CHECK(result.body["status"] == "completed");
    CHECK(result.body["rounds"] == 10);
    const auto v = result.body["total_value"].get<Points>();
    CHECK(result.body["compensation"].get<double>() == doctest::Approx(10.0 + static_cast<double>(v) / 6.0).epsilon(1e-12));
    CHECK(result.body["exchange_value_series"].size() == 10);
    CHECK(result.body["affinity_received_series"].size() == 11);
    // Both series recomputed straight from the raw events: units Carol sent
    // out, and the mean score the others hold for her after each round.
    std::vector<double> sent, received{3.0};
    for (const auto& e : api.manager().events(id)) {
        if (e.kind == EventKind::ExchangeResolved) {
            double units = 0;
            for (const auto& f : e.payload["delivered"])
                if (f["from"] == "Carol")
                    for (const auto& [label, n] : f["units"].items()) units += n.get<double>();
            sent.push_back(units);
        }
        if (e.kind == EventKind::RoundEnd) {
            const auto& a = e.payload["affinity"];
            received.push_back((a["Alice"]["Carol"].get<double>() + a["Bob"]["Carol"].get<double>()) / 2.0);
        }
    }
    CHECK(sent.at(0) > 0);
    for (std::size_t r = 0; r < sent.size(); ++r) CHECK(result.body["exchange_value_series"][r].get<double>() == sent[r]);
    for (std::size_t r = 0; r < received.size(); ++r) CHECK(result.body["affinity_received_series"][r].get<double>() == received[r]);
    // Finished sessions take no more input.
    r = api.post(base + "/turn", Json{{"actions", Json::array()}});
    CHECK(r.status == 409);
    // The full log replays.
    CHECK(replay_events(api.manager().events(id)).status == RunStatus::Completed);
}

TEST_CASE("unknown presets are rejected over HTTP") {
    ApiServer api;
    const auto r = api.post("/sessions", Json{{"preset", "battle-royale"}});
    CHECK(r.status == 400);
    CHECK(error_code(r) == "InvalidPreset");
}

TEST_CASE("a human seat played like a bot logs exactly what the bot would") {
    for (const auto* preset : {"human-study", "trust-violation"}) {
        CAPTURE(preset);
        const SessionRequest request{preset, Json{{"rounds", 12}, {"seed", 5}}};
        ApiServer api;
        const auto id = api.post("/sessions", Json{{"preset", preset}, {"options", request.options}}).body.at("session_id").get<std::string>();
        play_passively(api, id);
        const auto session_events = api.manager().events(id);

        auto cfg = session_config(request);
        cfg.repetitions = 1;
        cfg.agents[2].controller = parse_controller("scripted:pass-bot");
        const auto batch = run_experiment(cfg).repetitions.at(0).events;
        REQUIRE(batch.size() == session_events.size());
        for (std::size_t i = 0; i < batch.size(); ++i) CHECK(strip_identity(batch[i]) == strip_identity(session_events[i]));
    }
}

TEST_CASE("compensation is 10 plus a sixth of the final value") {
    ApiServer api;
    const std::vector<std::pair<Json, double>> cases{
        {Json{{"A", 0}, {"B", 0}, {"C", 0}}, 10.0},
        {Json{{"A", 10}, {"B", 15}, {"C", 20}}, 10.0 + 115.0 / 6.0},
        {Json{{"A", 36}, {"B", 33}, {"C", 33}}, 60.0},
    };
    for (const auto& [holding, expected] : cases) {
        const Json options{{"rounds", 1},
                           {"injection_per_round", 0},
                           {"co_players", "scripted:pass-bot"},
                           {"initial_holdings", {{"Carol", holding}}}};
        const auto id = api.post("/sessions", Json{{"preset", "human-study"}, {"options", options}}).body.at("session_id").get<std::string>();
        play_passively(api, id);
        const auto result = api.get("/sessions/" + id + "/result").body;
        CHECK(result["compensation"].get<double>() == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(compensation(115) == doctest::Approx(29.1666666666667).epsilon(1e-12));
}

TEST_CASE("an expired turn deadline submits the safe fallback") {
    auto now = std::make_shared<std::chrono::steady_clock::time_point>(std::chrono::steady_clock::time_point{});
    SessionServiceOptions options;
    options.clock = [now] { return *now; };
    SessionManager manager(options);
    const auto created = manager.create({"human-study", Json{{"turn_timeout_s", 30}, {"rounds", 3}}});
    const auto id = created.at("session_id").get<std::string>();
    CHECK(manager.state(id)["phase"] == "awaiting_turn");
    *now += std::chrono::seconds(29);
    CHECK(manager.state(id)["phase"] == "awaiting_turn");
    *now += std::chrono::seconds(2);
    const auto after = manager.state(id);
    // Carol's turn passed; the others may continue, so look at the log.
    const auto events = manager.events(id);
    bool saw_fallback = false;
    for (const auto& e : events) {
        if (e.kind == EventKind::Turn && e.payload["actor"] == "Carol") {
            CHECK(e.payload["fallback"] == true);
            CHECK(e.payload["actions"].empty());
            saw_fallback = true;
        }
    }
    CHECK(saw_fallback);
    CHECK(after["awaiting_you"] == true);
}

TEST_CASE("sessions can journal their log to disk") {
    const auto dir = fs::temp_directory_path() / ("setsim-journal-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    SessionServiceOptions options;
    options.journal_dir = dir.string();
    ApiServer api(options);
    const auto id = api.post("/sessions", Json{{"preset", "human-study"}, {"options", {{"rounds", 2}}}}).body.at("session_id").get<std::string>();
    play_passively(api, id);
    std::size_t logs = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        ++logs;
        CHECK(replay_log(entry.path().string()).status == RunStatus::Completed);
    }
    CHECK(logs == 1);
    fs::remove_all(dir);
}
