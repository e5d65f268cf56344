#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "setsim/events.hpp"
#include "setsim/policy.hpp"

namespace setsim {

enum class EngineStage { Start, RoundStart, Negotiation, Allocation, Resolve, Bdi, Affinity, RoundEnd, Finished };

std::string to_string(EngineStage stage);

enum class RunStatus { Running, Completed, Failed };

std::string to_string(RunStatus status);

struct EngineOptions {
    std::string run_id{"run"};
    int repetition_index{0};
};

// A decision the engine cannot produce itself; supply it with submit().
struct PendingInput {
    AgentId agent;
    DecisionKind kind;
    bool operator==(const PendingInput&) const = default;
};

// One repetition of the game as a resumable state machine:
//   inject -> negotiate -> allocate -> resolve -> BDI -> affinity, T times.
// advance() runs until a seat that awaits input is reached or the run ends.
// Events go to the listener as they are produced and stay in events().
class GameEngine {
public:
    GameEngine(std::shared_ptr<const ExperimentConfig> config, std::vector<std::shared_ptr<Policy>> roster,
               EngineOptions options = {});

    // Returns the pending input, or nullopt once finished. Throws
    // PolicyFailure if a non-interactive policy misbehaves; the run is then
    // marked failed and a run_end event is emitted first.
    std::optional<PendingInput> advance();

    // Supplies the pending decision. Errors (WrongPhase, NotYourTurn, the
    // negotiation errors, OverCommit, InvalidScore, MalformedDecision) leave
    // the engine unchanged. A second over-commit in the same allocation is
    // clamped instead of rejected.
    void submit(PolicyDecision decision);

    // Runs to the end; throws WrongPhase if any seat awaits input.
    void run_to_completion();

    void set_listener(std::function<void(const EventRecord&)> listener) { listener_ = std::move(listener); }

    const ExperimentConfig& config() const noexcept { return *config_; }
    const std::shared_ptr<const ExperimentConfig>& config_ptr() const noexcept { return config_; }
    EngineStage stage() const noexcept { return stage_; }
    RunStatus status() const noexcept { return status_; }
    const std::string& failure() const noexcept { return failure_; }
    bool finished() const noexcept { return stage_ == EngineStage::Finished; }
    int round() const noexcept { return round_; }
    const std::optional<PendingInput>& pending() const noexcept { return pending_; }
    const Holdings& holdings() const noexcept { return holdings_; }
    const AffinityLedger& affinity() const noexcept { return affinity_; }
    const NegotiationState& negotiation() const noexcept { return negotiation_; }
    const PairwiseLedger& promises() const noexcept { return promises_; }
    const std::vector<RoundMemory>& memory() const noexcept { return *memory_; }
    const BdiState& bdi(AgentId id) const { return bdi_.at(id.index()); }
    const std::vector<EventRecord>& events() const noexcept { return events_; }
    const std::vector<std::shared_ptr<Policy>>& roster() const noexcept { return roster_; }
    // True once the agent's allocation for the current round is in.
    bool has_allocation(AgentId id) const { return allocations_.at(id.index()).has_value(); }
    bool has_affinity(AgentId id) const { return affinity_updates_.at(id.index()).has_value(); }

    PolicyContext context_for(AgentId agent, DecisionKind kind) const;

private:
    void emit(EventKind kind, Json payload);
    void step();
    void start();
    void start_round();
    void negotiation_step();
    void apply_reply(AgentId actor, const TurnReply& reply, bool fallback, int attempts);
    void close_negotiation();
    void collect(DecisionKind kind);
    void finish_allocation();
    void resolve();
    void update_bdi();
    void finish_affinity();
    void end_round();
    [[noreturn]] void abort_run(AgentId agent, const std::string& what);
    PolicyDecision call_policy(AgentId agent, DecisionKind kind);
    Json agent_value_json(const Holdings& holdings) const;

    std::shared_ptr<const ExperimentConfig> config_;
    std::vector<std::shared_ptr<Policy>> roster_;
    EngineOptions options_;
    std::function<void(const EventRecord&)> listener_;

    EngineStage stage_{EngineStage::Start};
    RunStatus status_{RunStatus::Running};
    std::string failure_;
    int round_{0};
    std::uint64_t next_seq_{1};
    std::optional<PendingInput> pending_;
    int overcommit_strikes_{0};

    Holdings holdings_;
    AffinityLedger affinity_;
    NegotiationState negotiation_;
    PairwiseLedger promises_;
    std::shared_ptr<std::vector<RoundMemory>> memory_;
    std::vector<BdiState> bdi_;
    std::vector<std::vector<std::string>> notes_;
    std::vector<std::optional<PolicyDecision>> allocations_;
    std::vector<std::optional<PolicyDecision>> affinity_updates_;
    std::vector<EventRecord> events_;
};

}  // namespace setsim
