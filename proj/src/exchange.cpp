#include "setsim/exchange.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "setsim/error.hpp"

namespace setsim {

ResourceVector AllocationDecision::total(std::size_t num_types) const {
    ResourceVector sum(num_types);
    for (const auto& [_, v] : outgoing) sum += v;
    return sum;
}

Holdings inject_resources(Holdings holdings, std::span<const AgentProfile> profiles, Units amount) {
    for (const auto& p : profiles) {
        holdings.at(p.agent_id.index())[p.specialization] += amount;
    }
    return holdings;
}

void check_allocation(const AllocationDecision& decision, const ResourceVector& holdings, std::size_t num_agents) {
    const auto n = holdings.size();
    for (const auto& [target, v] : decision.outgoing) {
        if (target == decision.actor) fail(ErrorCode::InvalidDecision, "allocation sends resources to oneself");
        if (target.index() >= num_agents) fail(ErrorCode::InvalidDecision, "allocation names an unknown agent");
        if (v.size() != n) fail(ErrorCode::InvalidDecision, "allocation vector width differs from N");
    }
    const auto total = decision.total(n);
    if (!total.fits_within(holdings)) {
        std::string detail;
        for (std::size_t t = 0; t < n; ++t) {
            const auto type = static_cast<ResourceType>(t);
            if (total[type] > holdings[type]) {
                detail += " type " + std::to_string(t) + ": sends " + std::to_string(total[type]) + ", holds " +
                          std::to_string(holdings[type]) + ";";
            }
        }
        fail(ErrorCode::OverCommit, "allocation exceeds holdings:" + detail);
    }
}

AllocationDecision clamp_allocation(AllocationDecision decision, const ResourceVector& holdings) {
    const auto n = holdings.size();
    const auto total = decision.total(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto type = static_cast<ResourceType>(t);
        const Units requested = total[type];
        const Units available = holdings[type];
        if (requested <= available) continue;

        struct Share {
            AgentId target;
            Units floor_units;
            Units remainder;  // numerator of the fractional part, over `requested`
        };
        std::vector<Share> shares;
        Units assigned = 0;
        for (auto& [target, v] : decision.outgoing) {
            const Units scaled = v[type] * available;
            shares.push_back({target, scaled / requested, scaled % requested});
            assigned += scaled / requested;
        }
        std::stable_sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
            if (a.remainder != b.remainder) return a.remainder > b.remainder;
            return a.target < b.target;
        });
        Units slack = available - assigned;
        for (auto& s : shares) {
            if (slack == 0) break;
            if (s.remainder == 0) continue;
            ++s.floor_units;
            --slack;
        }
        for (const auto& s : shares) decision.outgoing[s.target][type] = s.floor_units;
        decision.clamped = true;
    }
    return decision;
}

RoundOutcome resolve_exchange(int round, const Holdings& holdings, std::span<const AllocationDecision> decisions,
                              const PairwiseLedger& promises, std::span<const Points> coefficients) {
    const auto m = holdings.size();
    const auto n = m ? holdings.front().size() : 0;

    std::vector<const AllocationDecision*> by_actor(m, nullptr);
    for (const auto& d : decisions) {
        if (d.actor.index() >= m) fail(ErrorCode::InvalidDecision, "decision from unknown agent");
        if (by_actor[d.actor.index()]) fail(ErrorCode::InvalidDecision, "duplicate decision for one agent");
        by_actor[d.actor.index()] = &d;
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (!by_actor[i]) fail(ErrorCode::MissingDecision, "no allocation decision for agent " + std::to_string(i));
        check_allocation(*by_actor[i], holdings[i], m);
    }

    RoundOutcome out;
    out.round = round;
    out.promised = promises;
    out.holdings_before = holdings;
    out.holdings_after = holdings;
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& [target, v] : by_actor[i]->outgoing) {
            if (v.is_zero()) continue;
            const AgentId from{static_cast<std::uint32_t>(i)};
            out.delivered[{from, target}] = v;
            out.holdings_after[i] -= v;
            out.holdings_after[target.index()] += v;
        }
    }

    std::set<std::pair<AgentId, AgentId>> pairs;
    for (const auto& [key, v] : promises) {
        if (!v.is_zero()) pairs.insert(key);
    }
    for (const auto& [key, _] : out.delivered) pairs.insert(key);
    for (const auto& key : pairs) {
        BreachRecord b;
        b.round = round;
        b.debtor = key.first;
        b.creditor = key.second;
        const auto p = promises.find(key);
        b.promised = p != promises.end() ? p->second : ResourceVector(n);
        const auto d = out.delivered.find(key);
        b.delivered = d != out.delivered.end() ? d->second : ResourceVector(n);
        b.signed_breach = compute_breach(b.promised, b.delivered);
        out.breaches.push_back(std::move(b));
    }

    for (const auto& h : out.holdings_after) {
        out.holding_values_after.push_back(holding_value(h, coefficients).total_points);
    }
    return out;
}

}  // namespace setsim
