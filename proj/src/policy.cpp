#include "setsim/policy.hpp"

#include <sstream>

#include "setsim/error.hpp"
#include "setsim/scoring.hpp"

namespace setsim {

std::string to_string(DecisionKind kind) {
    switch (kind) {
        case DecisionKind::ContinueOrPass: return "continue";
        case DecisionKind::TurnReply: return "reply";
        case DecisionKind::Allocation: return "allocation";
        case DecisionKind::BdiUpdate: return "bdi";
        case DecisionKind::AffinityUpdate: return "affinity";
    }
    return "";
}

DecisionKind PolicyDecision::kind() const noexcept {
    switch (value.index()) {
        case 0: return DecisionKind::ContinueOrPass;
        case 1: return DecisionKind::TurnReply;
        case 2: return DecisionKind::Allocation;
        case 3: return DecisionKind::BdiUpdate;
        default: return DecisionKind::AffinityUpdate;
    }
}

std::vector<const Proposal*> PolicyContext::pending_for_me() const {
    std::vector<const Proposal*> out;
    for (const auto& p : negotiation.proposals) {
        if (p.counterpart == self.agent_id && p.status == ProposalStatus::Pending) out.push_back(&p);
    }
    return out;
}

const RoundMemory* PolicyContext::last_round() const {
    if (!memory || memory->empty()) return nullptr;
    return &memory->back();
}

void validate_decision(DecisionKind kind, const PolicyDecision& decision, const PolicyContext& ctx) {
    if (decision.kind() != kind) {
        fail(ErrorCode::MalformedDecision, "expected a " + to_string(kind) + " decision, got " + to_string(decision.kind()));
    }
    const auto m = ctx.config->agents.size();
    switch (kind) {
        case DecisionKind::ContinueOrPass:
        case DecisionKind::BdiUpdate:
            return;
        case DecisionKind::TurnReply: {
            for (const auto& action : decision.as<TurnReply>().actions) {
                const std::string* id = nullptr;
                if (const auto* a = std::get_if<AcceptAction>(&action.kind)) id = &a->proposal_id;
                if (const auto* r = std::get_if<RejectAction>(&action.kind)) id = &r->proposal_id;
                if (id) {
                    const auto* p = ctx.negotiation.find(*id);
                    if (!p) fail(ErrorCode::MalformedDecision, "unknown proposal '" + *id + "'");
                    if (p->counterpart != ctx.id()) fail(ErrorCode::MalformedDecision, "proposal '" + *id + "' is not directed to you");
                    if (p->status != ProposalStatus::Pending) fail(ErrorCode::MalformedDecision, "proposal '" + *id + "' is not pending");
                } else {
                    const auto& p = std::get<ProposeAction>(action.kind);
                    if (p.counterpart == ctx.id() || p.counterpart.index() >= m) {
                        fail(ErrorCode::MalformedDecision, "proposal must target another agent");
                    }
                    if (p.give.is_zero() && p.receive.is_zero()) {
                        fail(ErrorCode::MalformedDecision, "proposal gives and receives nothing");
                    }
                }
            }
            return;
        }
        case DecisionKind::Allocation: {
            const auto& d = decision.as<AllocationDecision>();
            if (d.actor != ctx.id()) fail(ErrorCode::MalformedDecision, "allocation for another agent");
            check_allocation(d, ctx.holdings, m);
            return;
        }
        case DecisionKind::AffinityUpdate: {
            for (const auto& [target, score] : decision.as<AffinityUpdate>().scores) {
                if (target == ctx.id() || target.index() >= m) {
                    fail(ErrorCode::InvalidScore, "affinity target must be another agent");
                }
                if (score < kMinAffinity || score > kMaxAffinity) {
                    fail(ErrorCode::InvalidScore, "affinity score " + std::to_string(score) + " outside [1,5]");
                }
            }
            return;
        }
    }
}

PolicyDecision decide(Policy& policy, DecisionKind kind, const PolicyContext& ctx) {
    auto decision = policy.decide(kind, ctx);
    validate_decision(kind, decision, ctx);
    return decision;
}

PolicyDecision fallback_decision(DecisionKind kind, const PolicyContext& ctx) {
    PolicyDecision d;
    d.fallback = true;
    switch (kind) {
        case DecisionKind::ContinueOrPass: d.value = ContinueDecision{false}; break;
        case DecisionKind::TurnReply: d.value = TurnReply{}; break;
        case DecisionKind::Allocation: d.value = AllocationDecision{ctx.id(), {}, "", false}; break;
        case DecisionKind::BdiUpdate: d.value = ctx.bdi; break;
        case DecisionKind::AffinityUpdate: d.value = AffinityUpdate{}; break;
    }
    return d;
}

BdiState summarize_bdi(const PolicyContext& ctx) {
    const auto& cfg = *ctx.config;
    const auto value = holding_value(ctx.holdings, cfg.value_coefficients);

    ResourceType scarcest = 0;
    for (ResourceType t = 1; t < ctx.holdings.size(); ++t) {
        if (ctx.holdings[t] < ctx.holdings[scarcest]) scarcest = t;
    }

    std::ostringstream beliefs;
    beliefs << "Round " << ctx.round << " of " << ctx.total_rounds << ". Holdings "
            << format_resources(ctx.holdings, cfg) << " worth " << value.total_points << " points; scarcest resource "
            << cfg.label(scarcest) << ".";
    std::string trusted;
    std::string doubtful;
    if (const auto* last = ctx.last_round()) {
        for (const auto& b : last->outcome.breaches) {
            if (b.creditor != ctx.id()) continue;
            const auto& name = cfg.agent(b.debtor).display_name;
            beliefs << " " << name;
            if (b.signed_breach > 0) {
                beliefs << " under-delivered by " << b.signed_breach << ".";
                if (doubtful.empty()) doubtful = name;
            } else if (b.signed_breach < 0) {
                beliefs << " over-delivered by " << -b.signed_breach << ".";
                if (trusted.empty()) trusted = name;
            } else {
                beliefs << " kept its promise.";
                if (trusted.empty()) trusted = name;
            }
        }
    }

    BdiState bdi;
    bdi.beliefs = beliefs.str();
    const int remaining = ctx.total_rounds - ctx.round;
    bdi.desires = "Primary objective: grow complete " + std::to_string(cfg.num_resource_types) +
                  "-resource combinations, starting with more " + cfg.label(scarcest) +
                  ". Secondary objective: " + (remaining <= 1 ? "secure value before the game ends." : "keep reliable partners.");
    bdi.intentions = "Next-step trades: offer " + cfg.label(ctx.self.specialization) + " for " + cfg.label(scarcest) +
                     (trusted.empty() ? "." : " with " + trusted + ".") +
                     (doubtful.empty() ? " Risk buffer: keep trades small until partners prove reliable."
                                       : " Risk buffer: limit exposure to " + doubtful + ".");
    bdi.updated_at_round = ctx.round;
    return bdi;
}

AffinityUpdate rule_based_affinity(const PolicyContext& ctx) {
    AffinityUpdate update;
    const auto* last = ctx.last_round();
    if (!last) return update;
    for (const auto& b : last->outcome.breaches) {
        if (b.creditor != ctx.id()) continue;
        const auto it = ctx.affinity_out.find(b.debtor);
        const int current = it != ctx.affinity_out.end() ? it->second : kNeutralAffinity;
        int next = current;
        if (b.signed_breach > 0) {
            next = b.delivered.is_zero() ? kMinAffinity : current - 1;
        } else {
            next = current + 1;
        }
        next = std::clamp(next, kMinAffinity, kMaxAffinity);
        if (next != current) update.scores[b.debtor] = next;
    }
    update.rationale = "scored from last round's promised versus delivered resources";
    return update;
}

bool HumanBridgePolicy::awaits_input(DecisionKind kind) const {
    return kind == DecisionKind::TurnReply || kind == DecisionKind::Allocation || kind == DecisionKind::AffinityUpdate;
}

PolicyDecision HumanBridgePolicy::decide(DecisionKind kind, const PolicyContext& ctx) {
    switch (kind) {
        case DecisionKind::ContinueOrPass: return PolicyDecision{ContinueDecision{true}};
        case DecisionKind::BdiUpdate: return PolicyDecision{summarize_bdi(ctx)};
        default: return fallback_decision(kind, ctx);
    }
}

}  // namespace setsim
