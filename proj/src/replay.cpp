#include <map>

#include "setsim/error.hpp"
#include "setsim/runner.hpp"
#include "setsim/scoring.hpp"

namespace setsim {
namespace {

class Replayer {
public:
    explicit Replayer(const std::vector<EventRecord>& events) : events_(events) {}

    ReplayResult run() {
        if (events_.empty()) corrupt("log is empty");
        check_ordering();
        for (const auto& e : events_) {
            current_ = &e;
            try {
                apply(e);
            } catch (const Error& err) {
                if (err.code() == ErrorCode::CorruptLog || err.code() == ErrorCode::SchemaMismatch) throw;
                corrupt(std::string("event does not re-derive (") + std::string(to_string(err.code())) + "): " + err.what());
            } catch (const nlohmann::json::exception& err) {
                fail(ErrorCode::SchemaMismatch, at() + "payload is missing fields: " + err.what());
            }
            last_valid_ = e.seq;
            if (e.kind == EventKind::RunEnd) break;
        }
        if (!ended_) corrupt("log ends without run_end (truncated)");
        return std::move(result_);
    }

private:
    std::string at() const {
        return current_ ? "seq " + std::to_string(current_->seq) + " (" + to_string(current_->kind) + "): " : "";
    }

    [[noreturn]] void corrupt(const std::string& what) const {
        fail(ErrorCode::CorruptLog, at() + what + "; last valid seq " + std::to_string(last_valid_));
    }

    void check_ordering() {
        std::uint64_t prev_seq = 0;
        int prev_round = 0;
        for (const auto& e : events_) {
            if (e.schema_version != kSchemaVersion) {
                fail(ErrorCode::SchemaMismatch, "seq " + std::to_string(e.seq) + " has schema_version " +
                                                    std::to_string(e.schema_version) + ", expected " +
                                                    std::to_string(kSchemaVersion));
            }
            if (e.seq <= prev_seq) {
                fail(ErrorCode::SchemaMismatch, "seq " + std::to_string(e.seq) + " follows seq " + std::to_string(prev_seq));
            }
            if (e.round < prev_round) {
                fail(ErrorCode::SchemaMismatch, "seq " + std::to_string(e.seq) + " goes back to round " + std::to_string(e.round));
            }
            prev_seq = e.seq;
            prev_round = e.round;
        }
        if (events_.front().kind != EventKind::RunStart) fail(ErrorCode::SchemaMismatch, "log must begin with run_start");
    }

    void expect(bool ok, const std::string& what) const {
        if (!ok) corrupt(what);
    }

    void apply(const EventRecord& e) {
        const auto& p = e.payload;
        if (e.kind != EventKind::RunStart && !started_) corrupt("event before run_start");
        switch (e.kind) {
            case EventKind::RunStart: {
                if (started_) corrupt("second run_start");
                started_ = true;
                cfg_ = config_from_json(p.at("config"));
                result_.config = cfg_;
                result_.run_id = e.run_id;
                result_.repetition_index = e.repetition_index;
                holdings_ = holdings_from_json(p.at("initial_holdings"), cfg_);
                for (const auto& a : cfg_.agents) {
                    expect(holdings_.at(a.agent_id.index()) == a.initial_holdings, "initial holdings disagree with config");
                }
                affinity_ = AffinityLedger(cfg_.agents.size());
                expect(affinity_from_json(p.at("affinity"), cfg_) == affinity_, "initial affinity is not neutral");
                result_.holdings_by_round.push_back(holdings_);
                result_.affinity_by_round.push_back(affinity_);
                return;
            }
            case EventKind::RoundStart: {
                expect(e.round == round_ + 1, "round " + std::to_string(e.round) + " follows round " + std::to_string(round_));
                expect(stage_ == 0, "round_start before the previous round ended");
                round_ = e.round;
                expect(holdings_from_json(p.at("holdings"), cfg_) == holdings_, "round_start holdings differ from re-derived");
                stage_ = 1;
                return;
            }
            case EventKind::Injection: {
                expect(stage_ == 1, "injection out of order");
                expect(p.at("amount").get<Units>() == cfg_.injection_per_round, "injection amount differs from config");
                holdings_ = inject_resources(std::move(holdings_), cfg_.agents, cfg_.injection_per_round);
                expect(holdings_from_json(p.at("holdings_after"), cfg_) == holdings_, "holdings after injection differ");
                std::vector<AgentId> order;
                for (const auto& a : cfg_.agents) order.push_back(a.agent_id);
                negotiation_ = open_phase(round_, order, cfg_.max_discussion_rounds, cfg_.num_resource_types);
                decisions_.clear();
                stage_ = 2;
                return;
            }
            case EventKind::Turn: {
                expect(stage_ == 2, "turn outside negotiation");
                std::vector<AgentAction> actions;
                for (const auto& a : p.at("actions")) actions.push_back(action_from_json(a, cfg_));
                negotiation_ = apply_turn(std::move(negotiation_), cfg_.agent_by_name(p.at("actor").get<std::string>()),
                                          actions, p.at("utterance").get<std::string>());
                return;
            }
            case EventKind::ProposalStatus: {
                expect(stage_ == 2, "proposal_status outside negotiation");
                const auto logged = proposal_from_json(p.at("proposal"), cfg_);
                const auto* live = negotiation_.find(logged.proposal_id);
                expect(live && *live == logged, "proposal " + logged.proposal_id + " differs from re-derived");
                return;
            }
            case EventKind::NegotiationClosed: {
                expect(stage_ == 2, "negotiation_closed out of order");
                expect(negotiation_.closed(), "negotiation_closed while the re-derived phase is still open");
                promises_ = accepted_deals(negotiation_);
                expect(ledger_from_json(p.at("promises"), cfg_) == promises_, "promises differ from accepted proposals");
                std::vector<Proposal> logged;
                for (const auto& j : p.at("proposals")) logged.push_back(proposal_from_json(j, cfg_));
                expect(logged == negotiation_.proposals, "closing proposal list differs");
                stage_ = 3;
                return;
            }
            case EventKind::AllocationSubmitted: {
                expect(stage_ == 3, "allocation_submitted out of order");
                decisions_.push_back(allocation_from_json(p, cfg_));
                return;
            }
            case EventKind::ExchangeResolved: {
                expect(stage_ == 3, "exchange_resolved out of order");
                auto outcome = resolve_exchange(round_, holdings_, decisions_, promises_, cfg_.value_coefficients);
                expect(to_json(outcome, cfg_) == p, "exchange outcome differs from re-derived");
                holdings_ = outcome.holdings_after;
                result_.outcomes.push_back(std::move(outcome));
                stage_ = 4;
                return;
            }
            case EventKind::BdiUpdate: {
                expect(stage_ == 4, "bdi_update out of order");
                cfg_.agent_by_name(p.at("agent").get<std::string>());
                return;
            }
            case EventKind::AffinityUpdate: {
                expect(stage_ == 4, "affinity_update out of order");
                const auto owner = cfg_.agent_by_name(p.at("agent").get<std::string>());
                for (const auto& [name, score] : p.at("changes").items()) {
                    affinity_.set(owner, cfg_.agent_by_name(name), score.get<int>());
                }
                for (const auto& [name, score] : p.at("scores").items()) {
                    expect(affinity_.get(owner, cfg_.agent_by_name(name)) == score.get<int>(), "affinity row differs");
                }
                return;
            }
            case EventKind::RoundEnd: {
                expect(stage_ == 4, "round_end out of order");
                expect(holdings_from_json(p.at("holdings"), cfg_) == holdings_, "round_end holdings differ from re-derived");
                expect(affinity_from_json(p.at("affinity"), cfg_) == affinity_, "round_end affinity differs from re-derived");
                for (const auto& a : cfg_.agents) {
                    const auto v = holding_value(holdings_[a.agent_id.index()], cfg_.value_coefficients).total_points;
                    expect(p.at("values").at(a.display_name).get<Points>() == v, "value of " + a.display_name + " differs");
                }
                result_.holdings_by_round.push_back(holdings_);
                result_.affinity_by_round.push_back(affinity_);
                result_.rounds = round_;
                stage_ = 0;
                return;
            }
            case EventKind::RunEnd: {
                const auto status = p.at("status").get<std::string>();
                result_.status = status == "completed" ? RunStatus::Completed : RunStatus::Failed;
                if (result_.status == RunStatus::Completed) {
                    expect(stage_ == 0 && round_ == cfg_.rounds, "completed run_end before the last round ended");
                }
                expect(holdings_from_json(p.at("final_holdings"), cfg_) == holdings_, "final holdings differ");
                result_.final_holdings = holdings_;
                for (const auto& h : holdings_) result_.final_values.push_back(holding_value(h, cfg_.value_coefficients).total_points);
                ended_ = true;
                return;
            }
        }
    }

    const std::vector<EventRecord>& events_;
    const EventRecord* current_{nullptr};
    std::uint64_t last_valid_{0};
    bool started_{false};
    bool ended_{false};
    int round_{0};
    int stage_{0};  // 0 between rounds, 1 started, 2 negotiating, 3 allocating, 4 updating
    ExperimentConfig cfg_;
    Holdings holdings_;
    AffinityLedger affinity_;
    NegotiationState negotiation_;
    PairwiseLedger promises_;
    std::vector<AllocationDecision> decisions_;
    ReplayResult result_;
};

}  // namespace

ReplayResult replay_events(const std::vector<EventRecord>& events) { return Replayer(events).run(); }

ReplayResult replay_log(const std::string& path) {
    auto log = read_event_log(path);
    if (!log.error.empty()) {
        if (log.events.empty() && log.error.starts_with("cannot open")) fail(ErrorCode::CorruptLog, log.error);
        // Ordering problems in the readable prefix outrank the parse error.
        try {
            replay_events(log.events);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::SchemaMismatch) throw;
        }
        fail(ErrorCode::CorruptLog, "unreadable event at " + log.error + "; last valid seq " + std::to_string(log.last_valid_seq));
    }
    return replay_events(log.events);
}

}  // namespace setsim
