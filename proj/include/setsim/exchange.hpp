#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "setsim/scoring.hpp"
#include "setsim/types.hpp"

namespace setsim {

struct AllocationDecision {
    AgentId actor;
    std::map<AgentId, ResourceVector> outgoing;  // counterpart -> units sent
    std::string rationale;
    bool clamped{false};  // set when proportional clamping was applied

    ResourceVector total(std::size_t num_types) const;
    bool operator==(const AllocationDecision&) const = default;
};

struct RoundOutcome {
    int round{0};
    PairwiseLedger promised;
    PairwiseLedger delivered;
    std::vector<BreachRecord> breaches;
    Holdings holdings_before;
    Holdings holdings_after;
    std::vector<Points> holding_values_after;

    bool operator==(const RoundOutcome&) const = default;
};

// Adds S units of each agent's specialization.
Holdings inject_resources(Holdings holdings, std::span<const AgentProfile> profiles, Units amount);

// Throws OverCommit (outgoing exceeds holdings) or InvalidDecision
// (self-transfer, unknown counterpart, wrong vector width).
void check_allocation(const AllocationDecision& decision, const ResourceVector& holdings, std::size_t num_agents);

// Scales an over-committed allocation down per resource type: each
// counterpart's amount becomes floor(amount * available / requested) and the
// leftover units go to the largest fractional remainders (ties broken by
// counterpart id). Allocations that already fit are returned unchanged.
AllocationDecision clamp_allocation(AllocationDecision decision, const ResourceVector& holdings);

// All transfers are applied simultaneously against the pre-exchange
// holdings; nothing received this round can be re-sent. Breaches are
// recorded for every ordered pair where something was promised or
// delivered. Errors: MissingDecision, OverCommit, InvalidDecision.
RoundOutcome resolve_exchange(int round, const Holdings& holdings, std::span<const AllocationDecision> decisions,
                              const PairwiseLedger& promises, std::span<const Points> coefficients);

}  // namespace setsim
