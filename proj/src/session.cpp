#include "setsim/session.hpp"

#include <filesystem>
#include <set>
#include <random>

#include "setsim/analysis.hpp"
#include "setsim/error.hpp"
#include "setsim/prompts.hpp"
#include "setsim/scoring.hpp"

namespace setsim {

std::string to_string(SessionPhase phase) {
    switch (phase) {
        case SessionPhase::AwaitingTurn: return "awaiting_turn";
        case SessionPhase::AwaitingAllocation: return "awaiting_allocation";
        case SessionPhase::AwaitingAffinity: return "awaiting_affinity";
        case SessionPhase::BetweenRounds: return "between_rounds";
        case SessionPhase::Finished: return "finished";
    }
    return "";
}

namespace {

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::InvalidPreset, what); }

template <typename T>
T option(const Json& options, const char* key, T fallback) {
    const auto it = options.find(key);
    if (it == options.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        invalid(std::string("option '") + key + "' has the wrong type");
    }
}

Json redacted_actions(const std::vector<AgentAction>& actions, const ExperimentConfig& cfg) {
    Json out = Json::array();
    for (const auto& a : actions) out.push_back(to_json(a, cfg, false));
    return out;
}

Json value_json(const ResourceVector& holdings, const ExperimentConfig& cfg) {
    const auto v = holding_value(holdings, cfg.value_coefficients);
    Json combos = Json::array();
    for (const auto c : v.combos) combos.push_back(c);
    return Json{{"total_points", v.total_points}, {"combinations", std::move(combos)}};
}

}  // namespace

ExperimentConfig session_config(const SessionRequest& request) {
    const auto& o = request.options;
    if (!o.is_object()) invalid("options must be an object");
    static const std::set<std::string> known{"rounds",          "violation_round",     "co_players",       "controllers", "human",
                                             "seed",            "injection_per_round", "initial_holdings", "turn_timeout_s"};
    for (const auto& [key, _] : o.items()) {
        if (!known.contains(key)) invalid("unknown option '" + key + "'");
    }

    auto cfg = ExperimentConfig::reference_default();
    cfg.repetitions = 1;
    cfg.initial_allocation_mode = AllocationMode::SpecializedOnly;
    std::string co_players;
    if (request.preset == "human-study") {
        cfg.rounds = 10;
        co_players = "scripted:honest-reciprocator";
    } else if (request.preset == "trust-violation") {
        cfg.rounds = 20;
        const int k = option(o, "violation_round", 10);
        co_players = "scripted:trust-violator@" + std::to_string(k);
    } else {
        invalid("unknown preset '" + request.preset + "'");
    }
    cfg.rounds = option(o, "rounds", cfg.rounds);
    cfg.rng_seed = option<std::uint64_t>(o, "seed", 0);
    cfg.injection_per_round = option<Units>(o, "injection_per_round", cfg.injection_per_round);
    co_players = option(o, "co_players", co_players);
    const auto human = option<std::string>(o, "human", "Carol");
    apply_allocation_mode(cfg);

    try {
        if (o.contains("controllers")) {
            const auto& list = o.at("controllers");
            if (!list.is_array() || list.size() != cfg.agents.size()) invalid("controllers needs one entry per agent");
            for (std::size_t i = 0; i < list.size(); ++i) cfg.agents[i].controller = parse_controller(list[i].get<std::string>());
        } else {
            const auto seat = cfg.agent_by_name(human);
            for (auto& a : cfg.agents) {
                a.controller = a.agent_id == seat ? Controller{ControllerKind::Human, ""} : parse_controller(co_players);
            }
        }
        if (o.contains("initial_holdings")) {
            for (const auto& [name, units] : o.at("initial_holdings").items()) {
                auto& a = cfg.agents.at(cfg.agent_by_name(name).index());
                a.initial_holdings = resources_from_json(units, cfg);
            }
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidPreset) throw;
        invalid(e.what());
    } catch (const nlohmann::json::exception& e) {
        invalid(e.what());
    }

    std::size_t humans = 0;
    for (const auto& a : cfg.agents) humans += a.controller.kind == ControllerKind::Human ? 1 : 0;
    if (humans != 1) invalid("a session needs exactly one human seat, got " + std::to_string(humans));
    if (const auto report = validate_config(cfg); !report.ok()) invalid(report.violations.front());
    return cfg;
}

class Session {
public:
    Session(std::string id, std::string preset, std::shared_ptr<const ExperimentConfig> cfg, Roster roster,
            std::optional<double> timeout_s, const SessionServiceOptions& service)
        : id_(std::move(id)), preset_(std::move(preset)), roster_(std::move(roster)),
          engine_(cfg, roster_.policies, EngineOptions{id_, 0}), clock_(service.clock) {
        for (const auto& a : cfg->agents) {
            if (a.controller.kind == ControllerKind::Human) human_ = a.agent_id;
        }
        if (timeout_s) timeout_ = std::chrono::milliseconds(static_cast<long long>(*timeout_s * 1000));
        if (!service.journal_dir.empty()) {
            std::filesystem::create_directories(service.journal_dir);
            journal_ = std::make_unique<EventLogWriter>(
                (std::filesystem::path(service.journal_dir) / (id_ + ".ndjson")).string());
        }
        engine_.set_listener([this](const EventRecord& e) {
            if (journal_) journal_->write(e);
            publish();
        });
        std::lock_guard lock(write_);
        run_engine();
    }

    const std::string& id() const noexcept { return id_; }

    Json view() {
        expire_if_due();
        std::lock_guard lock(view_mutex_);
        return *view_;
    }

    Json submit(DecisionKind kind, const Json& body) {
        std::lock_guard lock(write_);
        expire_locked();
        require_turn(kind);
        PolicyDecision decision = decode(kind, body);
        try {
            engine_.submit(std::move(decision));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::OverCommit) throw;
            const auto& cfg = engine_.config();
            fail(ErrorCode::OverCommit, std::string(e.what()) + "; you hold " +
                                            format_resources(engine_.holdings().at(human_.index()), cfg) +
                                            ". A second over-committed allocation is scaled down to fit.");
        }
        run_engine();
        std::lock_guard view_lock(view_mutex_);
        return *view_;
    }

    Json result() {
        std::lock_guard lock(write_);
        if (!engine_.finished()) fail(ErrorCode::SessionNotFinished, "session " + id_ + " is still running");
        const auto& cfg = engine_.config();
        const auto log = log_view_from_events(engine_.events());
        const auto& h = engine_.holdings().at(human_.index());
        const auto v = holding_value(h, cfg.value_coefficients).total_points;
        Json exchange = Json::array();
        const auto exchanged = exchange_value_series(log);
        for (const double x : exchanged.at(human_.index())) exchange.push_back(x);
        Json received = Json::array();
        const auto affinity = affinity_received_series(log);
        for (const double x : affinity.at(human_.index())) received.push_back(x);
        return Json{{"session_id", id_},
                    {"status", to_string(engine_.status())},
                    {"human", cfg.agent(human_).display_name},
                    {"rounds", log.rounds},
                    {"final_holdings", to_json(h, cfg)},
                    {"value", value_json(h, cfg)},
                    {"total_value", v},
                    {"compensation", compensation(v)},
                    {"exchange_value_series", std::move(exchange)},
                    {"affinity_received_series", std::move(received)}};
    }

    std::vector<EventRecord> events() {
        std::lock_guard lock(write_);
        return engine_.events();
    }

private:
    void run_engine() {
        try {
            engine_.advance();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::PolicyFailure) throw;
            // The engine has already closed the log with a failed run_end.
        }
        deadline_.reset();
        if (timeout_ && engine_.pending()) deadline_ = clock_() + *timeout_;
        publish();
    }

    // Deadlines are enforced lazily when a request arrives.
    void expire_if_due() {
        std::unique_lock lock(write_, std::try_to_lock);
        if (lock.owns_lock()) expire_locked();
    }

    void expire_locked() {
        if (!deadline_ || clock_() < *deadline_ || !engine_.pending()) return;
        const auto [agent, kind] = *engine_.pending();
        auto decision = fallback_decision(kind, engine_.context_for(agent, kind));
        engine_.submit(std::move(decision));
        run_engine();
    }

    void require_turn(DecisionKind kind) {
        if (engine_.finished()) fail(ErrorCode::WrongPhase, "session has finished");
        const auto& pending = engine_.pending();
        const bool negotiating = engine_.stage() == EngineStage::Negotiation;
        if (pending && pending->agent == human_ && pending->kind == kind) return;
        if (kind == DecisionKind::TurnReply && negotiating) fail(ErrorCode::NotYourTurn, "it is not your turn");
        const auto phase = current_phase();
        fail(ErrorCode::WrongPhase, "session is in phase " + to_string(phase) + ", not accepting " + to_string(kind));
    }

    PolicyDecision decode(DecisionKind kind, const Json& body) {
        const auto& cfg = engine_.config();
        if (!body.is_object()) fail(ErrorCode::InvalidDecision, "request body must be a JSON object");
        try {
            switch (kind) {
                case DecisionKind::TurnReply: {
                    TurnReply reply;
                    reply.utterance = body.value("utterance", std::string());
                    const auto actions = body.value("actions", Json::array());
                    for (const auto& a : actions) reply.actions.push_back(action_from_json(a, cfg));
                    return PolicyDecision{std::move(reply)};
                }
                case DecisionKind::Allocation: {
                    AllocationDecision d{human_, {}, body.value("rationale", std::string()), false};
                    const auto outgoing = body.value("outgoing", Json::object());
                    for (const auto& [name, units] : outgoing.items()) {
                        auto v = resources_from_json(units, cfg);
                        if (!v.is_zero()) d.outgoing[cfg.agent_by_name(name)] = std::move(v);
                    }
                    return PolicyDecision{std::move(d)};
                }
                case DecisionKind::AffinityUpdate: {
                    AffinityUpdate u;
                    u.rationale = body.value("rationale", std::string());
                    const auto scores = body.value("scores", Json::object());
                    for (const auto& [name, score] : scores.items()) {
                        if (!score.is_number_integer()) fail(ErrorCode::InvalidScore, "score for " + name + " must be an integer");
                        u.scores[cfg.agent_by_name(name)] = score.get<int>();
                    }
                    return PolicyDecision{std::move(u)};
                }
                default:
                    break;
            }
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::InvalidDecision, e.what());
        }
        fail(ErrorCode::WrongPhase, "unsupported decision");
    }

    SessionPhase current_phase() const {
        if (engine_.finished()) return SessionPhase::Finished;
        switch (engine_.stage()) {
            case EngineStage::Negotiation: return SessionPhase::AwaitingTurn;
            case EngineStage::Allocation: return SessionPhase::AwaitingAllocation;
            case EngineStage::Affinity: return SessionPhase::AwaitingAffinity;
            default: return SessionPhase::BetweenRounds;
        }
    }

    // Only public information and the human's own state. Never rationale,
    // BDI, co-player affinity or allocations before the exchange resolves.
    void publish() {
        const auto& cfg = engine_.config();
        Json v;
        v["session_id"] = id_;
        v["preset"] = preset_;
        v["status"] = to_string(engine_.status());
        v["human"] = cfg.agent(human_).display_name;
        v["round"] = engine_.round();
        v["total_rounds"] = cfg.rounds;
        const auto phase = current_phase();
        v["phase"] = to_string(phase);

        const auto& neg = engine_.negotiation();
        const bool negotiating = engine_.stage() == EngineStage::Negotiation && !neg.closed() && !neg.turn_order.empty();
        v["turn_owner"] = negotiating ? Json(cfg.agent(neg.current_actor()).display_name) : Json(nullptr);
        const auto& pending = engine_.pending();
        v["awaiting_you"] = pending && pending->agent == human_;
        v["discussion_round"] = neg.discussion_round;
        v["max_discussion_rounds"] = cfg.max_discussion_rounds;

        Json agents = Json::array();
        for (const auto& a : cfg.agents) {
            agents.push_back({{"name", a.display_name}, {"specialization", cfg.label(a.specialization)}});
        }
        v["agents"] = std::move(agents);

        const auto& h = engine_.holdings().at(human_.index());
        v["holdings"] = to_json(h, cfg);
        v["value"] = value_json(h, cfg);

        Json transcript = Json::array();
        for (const auto& u : neg.transcript) {
            transcript.push_back({{"speaker", cfg.agent(u.speaker).display_name},
                                  {"text", u.text},
                                  {"actions", redacted_actions(u.actions, cfg)},
                                  {"discussion_round", u.discussion_round}});
        }
        v["transcript"] = std::move(transcript);
        Json proposals = Json::array();
        for (const auto& p : neg.proposals) proposals.push_back(to_json(p, cfg));
        v["proposals"] = std::move(proposals);

        Json owe = Json::object();
        Json owed = Json::object();
        for (const auto& [key, units] : engine_.promises()) {
            if (key.first == human_) owe[cfg.agent(key.second).display_name] = to_json(units, cfg);
            if (key.second == human_) owed[cfg.agent(key.first).display_name] = to_json(units, cfg);
        }
        v["promises"] = {{"you_owe", std::move(owe)}, {"owed_to_you", std::move(owed)}};

        Json mine = Json::object();
        for (const auto& a : cfg.agents) {
            if (a.agent_id != human_) mine[a.display_name] = engine_.affinity().get(human_, a.agent_id);
        }
        v["your_affinity"] = std::move(mine);
        v["affinity_rubric"] = affinity_rubric();

        if (!engine_.memory().empty()) {
            const auto& last = engine_.memory().back();
            Json breaches = Json::array();
            for (const auto& b : last.outcome.breaches) breaches.push_back(to_json(b, cfg));
            v["last_outcome"] = {{"round", last.round},
                                 {"promised", to_json(last.outcome.promised, cfg)},
                                 {"delivered", to_json(last.outcome.delivered, cfg)},
                                 {"breaches", std::move(breaches)}};
        } else {
            v["last_outcome"] = nullptr;
        }
        // A remaining-time field would make repeated reads differ.
        v["turn_timeout_s"] = timeout_ ? Json(std::chrono::duration<double>(*timeout_).count()) : Json(nullptr);
        auto snapshot = std::make_shared<const Json>(std::move(v));
        std::lock_guard lock(view_mutex_);
        view_ = std::move(snapshot);
    }

    std::string id_;
    std::string preset_;
    Roster roster_;
    GameEngine engine_;
    AgentId human_;
    std::function<std::chrono::steady_clock::time_point()> clock_;
    std::optional<std::chrono::milliseconds> timeout_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;
    std::unique_ptr<EventLogWriter> journal_;
    std::mutex write_;
    std::mutex view_mutex_;
    std::shared_ptr<const Json> view_;
};

SessionManager::SessionManager(SessionServiceOptions options) : options_(std::move(options)) {}
SessionManager::~SessionManager() = default;

Json SessionManager::create(const SessionRequest& request) {
    auto cfg = session_config(request);
    cfg.llm = options_.llm;
    std::optional<double> timeout;
    if (request.options.contains("turn_timeout_s") && !request.options["turn_timeout_s"].is_null()) {
        const auto& t = request.options["turn_timeout_s"];
        if (!t.is_number() || t.get<double>() <= 0) invalid("turn_timeout_s must be a positive number");
        timeout = t.get<double>();
    }
    std::string id;
    {
        std::lock_guard lock(mutex_);
        std::random_device rd;
        char suffix[9];
        std::snprintf(suffix, sizeof suffix, "%08x", rd());
        id = "s" + std::to_string(++counter_) + "-" + suffix;
    }
    auto shared = std::make_shared<const ExperimentConfig>(cfg);
    auto session = std::make_shared<Session>(id, request.preset, shared, make_roster(cfg, true), timeout, options_);
    {
        std::lock_guard lock(mutex_);
        sessions_[id] = session;
    }
    return Json{{"session_id", id}, {"state", session->view()}};
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "no session '" + id + "'");
    return it->second;
}

Json SessionManager::state(const std::string& id) { return find(id)->view(); }
Json SessionManager::submit_turn(const std::string& id, const Json& body) { return find(id)->submit(DecisionKind::TurnReply, body); }
Json SessionManager::submit_allocation(const std::string& id, const Json& body) {
    return find(id)->submit(DecisionKind::Allocation, body);
}
Json SessionManager::submit_affinity(const std::string& id, const Json& body) {
    return find(id)->submit(DecisionKind::AffinityUpdate, body);
}
Json SessionManager::result(const std::string& id) { return find(id)->result(); }
std::vector<EventRecord> SessionManager::events(const std::string& id) { return find(id)->events(); }

}  // namespace setsim
