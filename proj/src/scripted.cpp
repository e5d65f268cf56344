#include "setsim/scripted.hpp"

#include <charconv>
#include <random>

#include "setsim/error.hpp"

namespace setsim {
namespace {

ResourceVector saturating_sub(ResourceVector a, const ResourceVector& b) {
    for (ResourceType t = 0; t < a.size(); ++t) a[t] = a[t] > b[t] ? a[t] - b[t] : 0;
    return a;
}

// What the agent already owes from proposals accepted earlier in this phase.
ResourceVector committed(const PolicyContext& ctx) {
    ResourceVector owed(ctx.holdings.size());
    for (const auto& p : ctx.negotiation.proposals) {
        if (p.status != ProposalStatus::Accepted) continue;
        if (p.proposer == ctx.id()) owed += p.give;
        if (p.counterpart == ctx.id()) owed += p.receive;
    }
    return owed;
}

bool dealt_with(const PolicyContext& ctx, AgentId other) {
    for (const auto& p : ctx.negotiation.proposals) {
        if ((p.proposer == ctx.id() && p.counterpart == other) || (p.proposer == other && p.counterpart == ctx.id())) {
            return true;
        }
    }
    return false;
}

std::string describe(const TurnReply& reply, const PolicyContext& ctx) {
    const auto& cfg = *ctx.config;
    if (reply.actions.empty()) return "Nothing further from me this round.";
    std::string text;
    for (const auto& action : reply.actions) {
        if (!text.empty()) text += " ";
        if (const auto* a = std::get_if<AcceptAction>(&action.kind)) {
            text += "I accept " + a->proposal_id + ".";
        } else if (const auto* r = std::get_if<RejectAction>(&action.kind)) {
            text += "I have to decline " + r->proposal_id + ".";
        } else {
            const auto& p = std::get<ProposeAction>(action.kind);
            text += cfg.agent(p.counterpart).display_name + ", I offer " + format_resources(p.give, cfg) + " for " +
                    format_resources(p.receive, cfg) + ".";
        }
    }
    return text;
}

class Trader : public Policy {
public:
    PolicyDecision decide(DecisionKind kind, const PolicyContext& ctx) override {
        switch (kind) {
            case DecisionKind::ContinueOrPass: return PolicyDecision{ContinueDecision{true}};
            case DecisionKind::TurnReply: return PolicyDecision{negotiate(ctx)};
            case DecisionKind::Allocation: return PolicyDecision{allocate(ctx)};
            case DecisionKind::BdiUpdate: return PolicyDecision{summarize_bdi(ctx)};
            case DecisionKind::AffinityUpdate: return PolicyDecision{rule_based_affinity(ctx)};
        }
        return fallback_decision(kind, ctx);
    }

protected:
    virtual ResourceVector deliver(const PolicyContext&, AgentId /*creditor*/, const ResourceVector& promised) const {
        return promised;
    }
    virtual std::string allocation_rationale(const PolicyContext&) const { return "honoring accepted deals"; }

    TurnReply negotiate(const PolicyContext& ctx) const {
        TurnReply reply;
        auto available = saturating_sub(ctx.holdings, committed(ctx));
        for (const auto* p : ctx.pending_for_me()) {
            if (!p->give.is_zero() && p->receive.fits_within(available)) {
                available = available - p->receive;
                reply.actions.push_back(AgentAction{AcceptAction{p->proposal_id}, "affordable and adds resources I lack"});
            } else {
                reply.actions.push_back(AgentAction{RejectAction{p->proposal_id}, "cannot cover it or it gives me nothing"});
            }
        }

        if (ctx.negotiation.discussion_round == 1) {
            const auto& cfg = *ctx.config;
            const auto mine = ctx.self.specialization;
            std::vector<AgentId> partners;
            for (const auto& other : cfg.agents) {
                if (other.agent_id == ctx.id() || other.specialization == mine) continue;
                if (dealt_with(ctx, other.agent_id)) continue;
                partners.push_back(other.agent_id);
            }
            if (!partners.empty()) {
                const Units k = std::min<Units>(kScriptedTradeSize, available[mine] / partners.size());
                for (const auto partner : partners) {
                    if (k == 0) break;
                    ResourceVector give(cfg.num_resource_types), receive(cfg.num_resource_types);
                    give[mine] = k;
                    receive[cfg.agent(partner).specialization] = k;
                    reply.actions.push_back(AgentAction{ProposeAction{partner, give, receive}, "even swap toward complete sets"});
                }
            }
        }
        reply.utterance = describe(reply, ctx);
        return reply;
    }

    AllocationDecision allocate(const PolicyContext& ctx) const {
        AllocationDecision d{ctx.id(), {}, allocation_rationale(ctx), false};
        for (const auto& [key, promised] : ctx.promises_due) {
            if (key.first != ctx.id()) continue;
            auto units = deliver(ctx, key.second, promised);
            if (!units.is_zero()) d.outgoing[key.second] = std::move(units);
        }
        d = clamp_allocation(std::move(d), ctx.holdings);
        d.clamped = false;
        return d;
    }
};

class PassBot final : public Policy {
public:
    std::string name() const override { return "pass-bot"; }
    PolicyDecision decide(DecisionKind kind, const PolicyContext& ctx) override {
        switch (kind) {
            case DecisionKind::ContinueOrPass: return PolicyDecision{ContinueDecision{false}};
            case DecisionKind::TurnReply: return PolicyDecision{TurnReply{"Nothing further from me this round.", {}}};
            case DecisionKind::Allocation: return PolicyDecision{AllocationDecision{ctx.id(), {}, "keeping everything", false}};
            case DecisionKind::BdiUpdate: return PolicyDecision{summarize_bdi(ctx)};
            case DecisionKind::AffinityUpdate: return PolicyDecision{AffinityUpdate{}};
        }
        return fallback_decision(kind, ctx);
    }
};

class HonestReciprocator final : public Trader {
public:
    std::string name() const override { return "honest-reciprocator"; }
};

class ProselfDefector final : public Trader {
public:
    std::string name() const override { return "proself-defector"; }

protected:
    ResourceVector deliver(const PolicyContext&, AgentId, const ResourceVector& promised) const override {
        ResourceVector half = promised;
        for (ResourceType t = 0; t < half.size(); ++t) half[t] /= 2;
        return half;
    }
    std::string allocation_rationale(const PolicyContext&) const override { return "delivering half, keeping the rest"; }
};

class TitForTat final : public Trader {
public:
    std::string name() const override { return "tit-for-tat"; }

protected:
    ResourceVector deliver(const PolicyContext& ctx, AgentId creditor, const ResourceVector& promised) const override {
        const auto* last = ctx.last_round();
        if (!last) return promised;
        for (const auto& b : last->outcome.breaches) {
            if (b.debtor != creditor || b.creditor != ctx.id()) continue;
            const auto owed = b.promised.total();
            const auto got = b.delivered.total();
            if (owed == 0 || got >= owed) return promised;
            ResourceVector scaled = promised;
            for (ResourceType t = 0; t < scaled.size(); ++t) scaled[t] = scaled[t] * got / owed;
            return scaled;
        }
        return promised;
    }
    std::string allocation_rationale(const PolicyContext&) const override {
        return "mirroring what each partner delivered last round";
    }
};

class TrustViolator final : public Trader {
public:
    explicit TrustViolator(int violation_round) : violation_round_(violation_round) {}
    std::string name() const override { return "trust-violator@" + std::to_string(violation_round_); }

protected:
    ResourceVector deliver(const PolicyContext& ctx, AgentId, const ResourceVector& promised) const override {
        return ctx.round == violation_round_ ? ResourceVector(promised.size()) : promised;
    }
    std::string allocation_rationale(const PolicyContext& ctx) const override {
        return ctx.round == violation_round_ ? "withholding everything this round" : "honoring accepted deals";
    }

private:
    int violation_round_;
};

class RandomTrader final : public Policy {
public:
    std::string name() const override { return "random-trader"; }

    PolicyDecision decide(DecisionKind kind, const PolicyContext& ctx) override {
        std::mt19937_64 rng(ctx.seed);
        const auto& cfg = *ctx.config;
        const auto m = static_cast<std::uint32_t>(cfg.agents.size());
        const auto n = cfg.num_resource_types;
        auto other = [&] {
            const auto offset = 1 + static_cast<std::uint32_t>(rng() % (m - 1));
            return AgentId{(ctx.id().value + offset) % m};
        };
        switch (kind) {
            case DecisionKind::ContinueOrPass: return PolicyDecision{ContinueDecision{rng() % 5 != 0}};
            case DecisionKind::TurnReply: {
                TurnReply reply;
                for (const auto* p : ctx.pending_for_me()) {
                    const auto roll = rng() % 10;
                    if (roll < 5) reply.actions.push_back(AgentAction{AcceptAction{p->proposal_id}, "random accept"});
                    else if (roll < 8) reply.actions.push_back(AgentAction{RejectAction{p->proposal_id}, "random reject"});
                }
                if (rng() % 2) {
                    ResourceVector give(n), receive(n);
                    const auto gt = static_cast<ResourceType>(rng() % n);
                    if (ctx.holdings[gt] > 0) give[gt] = 1 + rng() % std::min<Units>(5, ctx.holdings[gt]);
                    receive[static_cast<ResourceType>(rng() % n)] = rng() % 6;
                    if (give.is_zero() && receive.is_zero()) receive[0] = 1;
                    reply.actions.push_back(AgentAction{ProposeAction{other(), give, receive}, "random offer"});
                }
                reply.utterance = describe(reply, ctx);
                return PolicyDecision{reply};
            }
            case DecisionKind::Allocation: {
                AllocationDecision d{ctx.id(), {}, "random delivery", false};
                for (const auto& [key, promised] : ctx.promises_due) {
                    if (key.first != ctx.id()) continue;
                    ResourceVector v = promised;
                    const auto mode = rng() % 3;  // nothing, half, all
                    for (ResourceType t = 0; t < n; ++t) v[t] = mode == 0 ? 0 : (mode == 1 ? v[t] / 2 : v[t]);
                    if (!v.is_zero()) d.outgoing[key.second] = v;
                }
                if (rng() % 10 == 0) {
                    auto [gift, _] = d.outgoing.try_emplace(other(), ResourceVector(n));
                    gift->second[static_cast<ResourceType>(rng() % n)] += 1;
                }
                d = clamp_allocation(std::move(d), ctx.holdings);
                d.clamped = false;
                return PolicyDecision{d};
            }
            case DecisionKind::BdiUpdate: return PolicyDecision{summarize_bdi(ctx)};
            case DecisionKind::AffinityUpdate: {
                AffinityUpdate u;
                for (const auto& a : cfg.agents) {
                    if (a.agent_id == ctx.id()) continue;
                    if (rng() % 10 < 3) u.scores[a.agent_id] = 1 + static_cast<int>(rng() % 5);
                }
                return PolicyDecision{u};
            }
        }
        return fallback_decision(kind, ctx);
    }
};

}  // namespace

std::unique_ptr<Policy> make_scripted_policy(std::string_view name) {
    if (name == "pass-bot") return std::make_unique<PassBot>();
    if (name == "honest-reciprocator") return std::make_unique<HonestReciprocator>();
    if (name == "proself-defector") return std::make_unique<ProselfDefector>();
    if (name == "tit-for-tat") return std::make_unique<TitForTat>();
    if (name == "random-trader") return std::make_unique<RandomTrader>();
    if (name == "trust-violator") return std::make_unique<TrustViolator>(10);
    constexpr std::string_view violator = "trust-violator@";
    if (name.starts_with(violator)) {
        int k = 0;
        const auto digits = name.substr(violator.size());
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec == std::errc{} && ptr == digits.data() + digits.size() && k >= 1) return std::make_unique<TrustViolator>(k);
    }
    fail(ErrorCode::ConfigError, "unknown scripted policy '" + std::string(name) + "'");
}

std::vector<std::string> scripted_policy_names() {
    return {"pass-bot", "honest-reciprocator", "proself-defector", "tit-for-tat", "trust-violator@K", "random-trader"};
}

}  // namespace setsim
