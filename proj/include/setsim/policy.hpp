#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "setsim/config.hpp"
#include "setsim/exchange.hpp"
#include "setsim/negotiation.hpp"

namespace setsim {

// One decision kind per prompt template: continue/pass, negotiation reply,
// exchange allocation, BDI update, affinity update.
enum class DecisionKind { ContinueOrPass, TurnReply, Allocation, BdiUpdate, AffinityUpdate };

std::string to_string(DecisionKind kind);

struct ContinueDecision {
    bool proceed{false};
    bool operator==(const ContinueDecision&) const = default;
};

struct TurnReply {
    std::string utterance;
    std::vector<AgentAction> actions;  // empty: pass
    bool operator==(const TurnReply&) const = default;
};

struct AffinityUpdate {
    std::map<AgentId, int> scores;  // targets not listed keep their score
    std::string rationale;
    bool operator==(const AffinityUpdate&) const = default;
};

struct PolicyDecision {
    std::variant<ContinueDecision, TurnReply, AllocationDecision, BdiState, AffinityUpdate> value;
    int attempts{1};
    bool fallback{false};

    DecisionKind kind() const noexcept;
    template <typename T>
    const T& as() const { return std::get<T>(value); }
};

// Everything revealed about one finished round.
struct RoundMemory {
    int round{0};
    std::vector<Utterance> transcript;
    std::vector<Proposal> proposals;
    RoundOutcome outcome;
};

struct PolicyContext {
    std::shared_ptr<const ExperimentConfig> config;
    AgentProfile self;
    int round{0};
    int total_rounds{0};
    ResourceVector holdings;
    // Public history, oldest first. During the BDI and affinity updates the
    // current round is already the last entry.
    std::shared_ptr<const std::vector<RoundMemory>> memory;
    std::vector<std::string> own_notes;  // own earlier rationales, never shared
    BdiState bdi;
    std::map<AgentId, int> affinity_out;
    NegotiationState negotiation;
    PairwiseLedger promises_due;  // rows where self is debtor or creditor
    std::uint64_t seed{0};

    AgentId id() const noexcept { return self.agent_id; }
    std::vector<const Proposal*> pending_for_me() const;
    // Latest finished round, if any.
    const RoundMemory* last_round() const;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    // True when decisions of this kind come from outside the engine.
    virtual bool awaits_input(DecisionKind) const { return false; }
    // True for policies whose calls are slow and independent (LLM); the
    // engine fans these out concurrently during simultaneous phases.
    virtual bool prefers_concurrency() const { return false; }
    // True when decisions may be invalid (models, people). The engine then
    // falls back to a pass instead of aborting the run.
    virtual bool interactive() const { return false; }
    virtual PolicyDecision decide(DecisionKind kind, const PolicyContext& ctx) = 0;
};

// Checks shape and engine preconditions: matching kind, affinity scores in
// [1,5], no self targets, allocations within holdings, accept/reject only on
// pending proposals addressed to the actor. Throws MalformedDecision,
// InvalidScore or OverCommit.
void validate_decision(DecisionKind kind, const PolicyDecision& decision, const PolicyContext& ctx);

// Calls the policy and validates the result.
PolicyDecision decide(Policy& policy, DecisionKind kind, const PolicyContext& ctx);

// Always-legal decisions: pass, zero allocation, unchanged BDI/affinity.
PolicyDecision fallback_decision(DecisionKind kind, const PolicyContext& ctx);

// Deterministic BDI text derived from holdings and partner reliability.
BdiState summarize_bdi(const PolicyContext& ctx);

// Rule-based affinity: full withholding -> 1, partial under-delivery -> -1,
// kept or exceeded promise or an unprompted gift -> +1, else unchanged.
AffinityUpdate rule_based_affinity(const PolicyContext& ctx);

// Seat for a human participant: turns, allocations and affinity come from
// the session API; BDI is summarized by the engine.
class HumanBridgePolicy final : public Policy {
public:
    std::string name() const override { return "human"; }
    bool awaits_input(DecisionKind kind) const override;
    bool interactive() const override { return true; }
    PolicyDecision decide(DecisionKind kind, const PolicyContext& ctx) override;
};

}  // namespace setsim
