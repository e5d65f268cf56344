#include "setsim/engine.hpp"

#include <exception>
#include <future>
#include <variant>

#include "setsim/error.hpp"
#include "setsim/rng.hpp"
#include "setsim/scoring.hpp"

namespace setsim {
namespace {

using Attempt = std::variant<PolicyDecision, std::exception_ptr>;

bool recoverable(const Error& e) {
    switch (e.code()) {
        case ErrorCode::MalformedDecision:
        case ErrorCode::InvalidScore:
        case ErrorCode::OverCommit:
        case ErrorCode::InvalidDecision:
        case ErrorCode::UnknownAgent:
        case ErrorCode::UnknownResourceType:
            return true;
        default:
            return false;
    }
}

std::string describe(const Error& e) { return std::string(to_string(e.code())) + ": " + e.what(); }

Json decision_meta(Json j, const PolicyDecision& d) {
    j["fallback"] = d.fallback;
    j["attempts"] = d.attempts;
    return j;
}

}  // namespace

std::string to_string(EngineStage stage) {
    switch (stage) {
        case EngineStage::Start: return "start";
        case EngineStage::RoundStart: return "round_start";
        case EngineStage::Negotiation: return "negotiation";
        case EngineStage::Allocation: return "allocation";
        case EngineStage::Resolve: return "resolve";
        case EngineStage::Bdi: return "bdi";
        case EngineStage::Affinity: return "affinity";
        case EngineStage::RoundEnd: return "round_end";
        case EngineStage::Finished: return "finished";
    }
    return "";
}

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::Running: return "running";
        case RunStatus::Completed: return "completed";
        case RunStatus::Failed: return "failed";
    }
    return "";
}

GameEngine::GameEngine(std::shared_ptr<const ExperimentConfig> config, std::vector<std::shared_ptr<Policy>> roster,
                       EngineOptions options)
    : config_(std::move(config)), roster_(std::move(roster)), options_(std::move(options)),
      memory_(std::make_shared<std::vector<RoundMemory>>()) {
    if (!config_) fail(ErrorCode::ConfigError, "engine needs a config");
    if (const auto report = validate_config(*config_); !report.ok()) {
        fail(ErrorCode::ConfigError, "invalid config: " + report.violations.front());
    }
    if (roster_.size() != config_->agents.size()) {
        fail(ErrorCode::ConfigError, "roster has " + std::to_string(roster_.size()) + " policies for " +
                                         std::to_string(config_->agents.size()) + " agents");
    }
    for (const auto& p : roster_) {
        if (!p) fail(ErrorCode::ConfigError, "roster entry without a policy");
    }
}

std::optional<PendingInput> GameEngine::advance() {
    while (!finished() && !pending_) step();
    return pending_;
}

void GameEngine::run_to_completion() {
    if (const auto p = advance()) {
        fail(ErrorCode::WrongPhase, config_->agent(p->agent).display_name + " awaits external " + to_string(p->kind) +
                                        " input");
    }
}

void GameEngine::step() {
    switch (stage_) {
        case EngineStage::Start: start(); break;
        case EngineStage::RoundStart: start_round(); break;
        case EngineStage::Negotiation: negotiation_step(); break;
        case EngineStage::Allocation: collect(DecisionKind::Allocation); break;
        case EngineStage::Resolve: resolve(); break;
        case EngineStage::Bdi: update_bdi(); break;
        case EngineStage::Affinity: collect(DecisionKind::AffinityUpdate); break;
        case EngineStage::RoundEnd: end_round(); break;
        case EngineStage::Finished: break;
    }
}

void GameEngine::emit(EventKind kind, Json payload) {
    EventRecord e;
    e.run_id = options_.run_id;
    e.repetition_index = options_.repetition_index;
    e.round = round_;
    e.seq = next_seq_++;
    e.kind = kind;
    e.payload = std::move(payload);
    events_.push_back(e);
    if (listener_) listener_(events_.back());
}

Json GameEngine::agent_value_json(const Holdings& holdings) const {
    Json j = Json::object();
    for (const auto& a : config_->agents) {
        j[a.display_name] = holding_value(holdings.at(a.agent_id.index()), config_->value_coefficients).total_points;
    }
    return j;
}

void GameEngine::start() {
    const auto& cfg = *config_;
    const auto m = cfg.agents.size();
    holdings_.clear();
    for (const auto& a : cfg.agents) holdings_.push_back(a.initial_holdings);
    affinity_ = AffinityLedger(m);
    bdi_.assign(m, BdiState{});
    notes_.assign(m, {});

    Json roster = Json::array();
    for (std::size_t i = 0; i < m; ++i) {
        roster.push_back({{"agent", cfg.agents[i].display_name}, {"policy", roster_[i]->name()}});
    }
    Json payload;
    payload["config"] = to_json(cfg);
    payload["roster"] = std::move(roster);
    payload["initial_holdings"] = holdings_to_json(holdings_, cfg);
    payload["affinity"] = to_json(affinity_, cfg);
    emit(EventKind::RunStart, std::move(payload));
    stage_ = EngineStage::RoundStart;
}

void GameEngine::start_round() {
    const auto& cfg = *config_;
    if (round_ >= cfg.rounds) {
        status_ = RunStatus::Completed;
        emit(EventKind::RunEnd, Json{{"status", to_string(status_)},
                                     {"final_holdings", holdings_to_json(holdings_, cfg)},
                                     {"final_values", agent_value_json(holdings_)}});
        stage_ = EngineStage::Finished;
        return;
    }
    ++round_;
    emit(EventKind::RoundStart, Json{{"holdings", holdings_to_json(holdings_, cfg)}});
    holdings_ = inject_resources(std::move(holdings_), cfg.agents, cfg.injection_per_round);
    emit(EventKind::Injection, Json{{"amount", cfg.injection_per_round}, {"holdings_after", holdings_to_json(holdings_, cfg)}});

    std::vector<AgentId> order;
    for (const auto& a : cfg.agents) order.push_back(a.agent_id);
    negotiation_ = open_phase(round_, std::move(order), cfg.max_discussion_rounds, cfg.num_resource_types);
    promises_.clear();
    allocations_.assign(cfg.agents.size(), std::nullopt);
    affinity_updates_.assign(cfg.agents.size(), std::nullopt);
    stage_ = EngineStage::Negotiation;
}

PolicyContext GameEngine::context_for(AgentId agent, DecisionKind kind) const {
    const auto& cfg = *config_;
    PolicyContext ctx;
    ctx.config = config_;
    ctx.self = cfg.agent(agent);
    ctx.round = round_;
    ctx.total_rounds = cfg.rounds;
    ctx.holdings = holdings_.at(agent.index());
    ctx.memory = memory_;
    ctx.own_notes = notes_.at(agent.index());
    ctx.bdi = bdi_.at(agent.index());
    for (const auto& other : cfg.agents) {
        if (other.agent_id != agent) ctx.affinity_out[other.agent_id] = affinity_.get(agent, other.agent_id);
    }
    ctx.negotiation = negotiation_;
    for (const auto& [key, units] : promises_) {
        if (key.first == agent || key.second == agent) ctx.promises_due.emplace(key, units);
    }
    const bool per_turn = kind == DecisionKind::ContinueOrPass || kind == DecisionKind::TurnReply;
    ctx.seed = derive_seed(cfg.rng_seed, {static_cast<std::uint64_t>(options_.repetition_index),
                                          static_cast<std::uint64_t>(round_), agent.value,
                                          static_cast<std::uint64_t>(kind),
                                          per_turn ? negotiation_.transcript.size() : 0});
    return ctx;
}

void GameEngine::abort_run(AgentId agent, const std::string& what) {
    status_ = RunStatus::Failed;
    failure_ = config_->agent(agent).display_name + ": " + what;
    emit(EventKind::RunEnd, Json{{"status", to_string(status_)},
                                 {"error", failure_},
                                 {"final_holdings", holdings_to_json(holdings_, *config_)},
                                 {"final_values", agent_value_json(holdings_)}});
    stage_ = EngineStage::Finished;
    pending_.reset();
    fail(ErrorCode::PolicyFailure, failure_);
}

// Decisions from interactive policies that fail validation become the safe
// fallback; anything else ends the run.
PolicyDecision GameEngine::call_policy(AgentId agent, DecisionKind kind) {
    auto& policy = *roster_.at(agent.index());
    const auto ctx = context_for(agent, kind);
    try {
        return decide(policy, kind, ctx);
    } catch (const Error& e) {
        if (policy.interactive() && recoverable(e)) return fallback_decision(kind, ctx);
        abort_run(agent, describe(e));
    } catch (const std::exception& e) {
        abort_run(agent, e.what());
    }
}

void GameEngine::negotiation_step() {
    if (negotiation_.closed()) {
        close_negotiation();
        return;
    }
    const auto actor = negotiation_.current_actor();
    auto& policy = *roster_.at(actor.index());
    if (policy.awaits_input(DecisionKind::TurnReply)) {
        pending_ = PendingInput{actor, DecisionKind::TurnReply};
        return;
    }
    const auto cont = call_policy(actor, DecisionKind::ContinueOrPass);
    if (!cont.as<ContinueDecision>().proceed) {
        apply_reply(actor, TurnReply{}, cont.fallback, cont.attempts);
        return;
    }
    const auto d = call_policy(actor, DecisionKind::TurnReply);
    const auto& reply = d.as<TurnReply>();
    try {
        apply_reply(actor, reply, d.fallback, d.attempts);
    } catch (const Error& e) {
        if (!policy.interactive()) abort_run(actor, describe(e));
        apply_reply(actor, TurnReply{reply.utterance, {}}, true, d.attempts);
    }
}

void GameEngine::apply_reply(AgentId actor, const TurnReply& reply, bool fallback, int attempts) {
    const auto& cfg = *config_;
    auto next = apply_turn(negotiation_, actor, reply.actions, reply.utterance);
    const auto before = std::move(negotiation_);
    negotiation_ = std::move(next);

    Json actions = Json::array();
    for (const auto& a : reply.actions) actions.push_back(to_json(a, cfg));
    emit(EventKind::Turn, Json{{"actor", cfg.agent(actor).display_name},
                               {"utterance", reply.utterance},
                               {"actions", std::move(actions)},
                               {"discussion_round", before.discussion_round},
                               {"fallback", fallback},
                               {"attempts", attempts}});
    for (std::size_t i = 0; i < negotiation_.proposals.size(); ++i) {
        const auto& p = negotiation_.proposals[i];
        if (i < before.proposals.size() && before.proposals[i].status == p.status) continue;
        emit(EventKind::ProposalStatus, Json{{"proposal", to_json(p, cfg)}});
    }
}

void GameEngine::close_negotiation() {
    const auto& cfg = *config_;
    promises_ = accepted_deals(negotiation_);
    Json proposals = Json::array();
    for (const auto& p : negotiation_.proposals) proposals.push_back(to_json(p, cfg));
    emit(EventKind::NegotiationClosed, Json{{"proposals", std::move(proposals)},
                                            {"promises", to_json(promises_, cfg)},
                                            {"discussion_rounds", negotiation_.discussion_round},
                                            {"turns", negotiation_.transcript.size()}});
    stage_ = EngineStage::Allocation;
}

void GameEngine::collect(DecisionKind kind) {
    auto& slots = kind == DecisionKind::Allocation ? allocations_ : affinity_updates_;
    const auto m = roster_.size();

    // Slow independent calls go out together; results are settled in agent
    // order so the log does not depend on completion order.
    std::vector<std::optional<Attempt>> results(m);
    std::vector<std::future<Attempt>> futures(m);
    auto attempt = [this, kind](AgentId id) -> Attempt {
        try {
            return decide(*roster_[id.index()], kind, context_for(id, kind));
        } catch (...) {
            return std::current_exception();
        }
    };
    for (std::uint32_t i = 0; i < m; ++i) {
        if (slots[i] || roster_[i]->awaits_input(kind)) continue;
        if (roster_[i]->prefers_concurrency()) futures[i] = std::async(std::launch::async, attempt, AgentId{i});
    }
    for (std::uint32_t i = 0; i < m; ++i) {
        if (slots[i] || roster_[i]->awaits_input(kind)) continue;
        results[i] = futures[i].valid() ? futures[i].get() : attempt(AgentId{i});
    }
    for (std::uint32_t i = 0; i < m; ++i) {
        if (!results[i]) continue;
        const AgentId id{i};
        if (auto* d = std::get_if<PolicyDecision>(&*results[i])) {
            slots[i] = std::move(*d);
            continue;
        }
        try {
            std::rethrow_exception(std::get<std::exception_ptr>(*results[i]));
        } catch (const Error& e) {
            if (roster_[i]->interactive() && recoverable(e)) {
                slots[i] = fallback_decision(kind, context_for(id, kind));
            } else {
                abort_run(id, describe(e));
            }
        } catch (const std::exception& e) {
            abort_run(id, e.what());
        }
    }

    for (std::uint32_t i = 0; i < m; ++i) {
        if (!slots[i]) {
            pending_ = PendingInput{AgentId{i}, kind};
            return;
        }
    }
    if (kind == DecisionKind::Allocation) finish_allocation();
    else finish_affinity();
}

void GameEngine::finish_allocation() {
    const auto& cfg = *config_;
    for (std::uint32_t i = 0; i < allocations_.size(); ++i) {
        const auto& d = *allocations_[i];
        const auto& alloc = d.as<AllocationDecision>();
        if (!alloc.rationale.empty()) notes_[i].push_back("Round " + std::to_string(round_) + " delivery: " + alloc.rationale);
        emit(EventKind::AllocationSubmitted, decision_meta(to_json(alloc, cfg), d));
    }
    stage_ = EngineStage::Resolve;
}

void GameEngine::resolve() {
    const auto& cfg = *config_;
    std::vector<AllocationDecision> decisions;
    for (const auto& d : allocations_) decisions.push_back(d->as<AllocationDecision>());
    auto outcome = resolve_exchange(round_, holdings_, decisions, promises_, cfg.value_coefficients);
    holdings_ = outcome.holdings_after;
    emit(EventKind::ExchangeResolved, to_json(outcome, cfg));
    memory_->push_back(RoundMemory{round_, negotiation_.transcript, negotiation_.proposals, std::move(outcome)});
    stage_ = EngineStage::Bdi;
}

void GameEngine::update_bdi() {
    const auto& cfg = *config_;
    const auto m = roster_.size();
    std::vector<std::future<PolicyDecision>> futures(m);
    std::vector<PolicyDecision> decisions;
    // call_policy may abort the run, so only the raw calls run off-thread.
    auto raw = [this](AgentId id) { return decide(*roster_[id.index()], DecisionKind::BdiUpdate, context_for(id, DecisionKind::BdiUpdate)); };
    for (std::uint32_t i = 0; i < m; ++i) {
        if (roster_[i]->prefers_concurrency()) futures[i] = std::async(std::launch::async, raw, AgentId{i});
    }
    for (std::uint32_t i = 0; i < m; ++i) {
        const AgentId id{i};
        if (!futures[i].valid()) {
            decisions.push_back(call_policy(id, DecisionKind::BdiUpdate));
            continue;
        }
        try {
            decisions.push_back(futures[i].get());
        } catch (const Error& e) {
            if (!roster_[i]->interactive() || !recoverable(e)) abort_run(id, describe(e));
            decisions.push_back(fallback_decision(DecisionKind::BdiUpdate, context_for(id, DecisionKind::BdiUpdate)));
        } catch (const std::exception& e) {
            abort_run(id, e.what());
        }
    }
    for (std::uint32_t i = 0; i < m; ++i) {
        bdi_[i] = decisions[i].as<BdiState>();
        emit(EventKind::BdiUpdate,
             decision_meta(Json{{"agent", cfg.agents[i].display_name}, {"bdi", to_json(bdi_[i])}}, decisions[i]));
    }
    stage_ = EngineStage::Affinity;
}

void GameEngine::finish_affinity() {
    const auto& cfg = *config_;
    for (std::uint32_t i = 0; i < affinity_updates_.size(); ++i) {
        const auto& d = *affinity_updates_[i];
        const auto& update = d.as<AffinityUpdate>();
        const AgentId owner{i};
        Json changes = Json::object();
        for (const auto& [target, score] : update.scores) {
            affinity_.set(owner, target, score);
            changes[cfg.agent(target).display_name] = score;
        }
        Json row = Json::object();
        for (const auto& a : cfg.agents) {
            if (a.agent_id != owner) row[a.display_name] = affinity_.get(owner, a.agent_id);
        }
        if (!update.rationale.empty()) notes_[i].push_back("Round " + std::to_string(round_) + " affinity: " + update.rationale);
        emit(EventKind::AffinityUpdate, decision_meta(Json{{"agent", cfg.agents[i].display_name},
                                                           {"changes", std::move(changes)},
                                                           {"scores", std::move(row)},
                                                           {"rationale", update.rationale}},
                                                      d));
    }
    stage_ = EngineStage::RoundEnd;
}

void GameEngine::end_round() {
    const auto& cfg = *config_;
    emit(EventKind::RoundEnd, Json{{"holdings", holdings_to_json(holdings_, cfg)},
                                   {"values", agent_value_json(holdings_)},
                                   {"affinity", to_json(affinity_, cfg)}});
    stage_ = EngineStage::RoundStart;
}

void GameEngine::submit(PolicyDecision decision) {
    if (!pending_) fail(ErrorCode::WrongPhase, "no input is pending (stage " + to_string(stage_) + ")");
    const auto [agent, kind] = *pending_;
    if (decision.kind() != kind) {
        fail(ErrorCode::WrongPhase, "expected a " + to_string(kind) + " decision, got " + to_string(decision.kind()));
    }
    const auto ctx = context_for(agent, kind);
    switch (kind) {
        case DecisionKind::TurnReply: {
            // apply_turn is atomic: on error nothing has changed.
            apply_reply(agent, decision.as<TurnReply>(), decision.fallback, decision.attempts);
            break;
        }
        case DecisionKind::Allocation: {
            auto& alloc = std::get<AllocationDecision>(decision.value);
            alloc.actor = agent;
            try {
                check_allocation(alloc, ctx.holdings, config_->agents.size());
            } catch (const Error& e) {
                if (e.code() != ErrorCode::OverCommit) throw;
                if (overcommit_strikes_++ == 0) throw;
                alloc = clamp_allocation(std::move(alloc), ctx.holdings);
            }
            overcommit_strikes_ = 0;
            allocations_.at(agent.index()) = std::move(decision);
            break;
        }
        case DecisionKind::AffinityUpdate: {
            validate_decision(kind, decision, ctx);
            affinity_updates_.at(agent.index()) = std::move(decision);
            break;
        }
        default:
            fail(ErrorCode::WrongPhase, "decisions of kind " + to_string(kind) + " are not accepted from outside");
    }
    pending_.reset();
}

}  // namespace setsim
