#pragma once

// Hand-built event logs for the metrics. Only the events each metric reads
// are present; the expected numbers next to each builder were worked out on
// by hand from the listed inputs.

#include <vector>

#include "setsim/events.hpp"
#include "setsim/json_codec.hpp"
#include "setsim/scoring.hpp"

namespace fixture {

using namespace setsim;

inline constexpr AgentId kAlice{0}, kBob{1}, kCarol{2};

class LogBuilder {
public:
    explicit LogBuilder(int rounds, std::string run_id = "fixture") : run_id_(std::move(run_id)) {
        cfg_ = ExperimentConfig::reference_default();
        cfg_.rounds = rounds;
        cfg_.agents[0].svo = SocialValueOrientation::Prosocial;
        cfg_.agents[1].svo = SocialValueOrientation::Prosocial;
        cfg_.agents[2].svo = SocialValueOrientation::Proself;
        push(0, EventKind::RunStart, Json{{"config", to_json(cfg_)}});
        holdings_ = Holdings(3, ResourceVector{20, 20, 20});
    }

    const ExperimentConfig& config() const { return cfg_; }

    void injection(int round, const Holdings& after) {
        push(round, EventKind::Injection, Json{{"amount", 15}, {"holdings_after", holdings_to_json(after, cfg_)}});
    }

    void closed(int round, const std::vector<Proposal>& proposals) {
        Json list = Json::array();
        for (const auto& p : proposals) list.push_back(to_json(p, cfg_));
        push(round, EventKind::NegotiationClosed, Json{{"proposals", list}});
    }

    // One directed delivery: debtor promised `promised` units and sent
    // `delivered` units of its own type to creditor.
    struct Flow {
        AgentId debtor;
        AgentId creditor;
        Units promised;
        Units delivered;
    };

    void exchange(int round, const std::vector<Flow>& flows, const Holdings& after = {}) {
        RoundOutcome o;
        o.round = round;
        for (const auto& f : flows) {
            ResourceVector promised(3), delivered(3);
            promised[f.debtor.value] = f.promised;
            delivered[f.debtor.value] = f.delivered;
            o.promised[{f.debtor, f.creditor}] = promised;
            o.delivered[{f.debtor, f.creditor}] = delivered;
            o.breaches.push_back(BreachRecord{round, f.debtor, f.creditor, promised, delivered,
                                              static_cast<std::int64_t>(f.promised) - static_cast<std::int64_t>(f.delivered)});
        }
        o.holdings_after = after.empty() ? holdings_ : after;
        for (const auto& h : o.holdings_after) o.holding_values_after.push_back(holding_value(h, cfg_.value_coefficients).total_points);
        push(round, EventKind::ExchangeResolved, to_json(o, cfg_));
    }

    std::vector<EventRecord> events() const { return events_; }

private:
    void push(int round, EventKind kind, Json payload) {
        EventRecord e;
        e.run_id = run_id_;
        e.round = round;
        e.seq = events_.size() + 1;
        e.kind = kind;
        e.payload = std::move(payload);
        events_.push_back(std::move(e));
    }

    ExperimentConfig cfg_;
    std::string run_id_;
    Holdings holdings_;
    std::vector<EventRecord> events_;
};

// Units delivered out per agent and round, T = 10, each agent to the next.
//   rounds 1-2:  Alice 1 2, Bob 3 4, Carol 8 9
//       pooled 1 2 3 4 8 9 -> lower median 3 (the upper would be 4)
//   rounds 3-8:  Alice 1 2 4 5 6 7, Bob 7 7 8 9 10 6, Carol 0 3 5 11 12 13
//       nine values <= 6, the ninth of eighteen is 6 (the tenth is 7)
//   rounds 9-10: Alice 6 10, Bob 2 6, Carol 9 12
//       pooled 2 6 6 9 10 12 -> lower median 6 (the upper would be 9)
// Expected phase medians: 3, 6, 6.
inline const std::vector<std::vector<Units>> kPhaseSeries{
    {1, 2, 1, 2, 4, 5, 6, 7, 6, 10},
    {3, 4, 7, 7, 8, 9, 10, 6, 2, 6},
    {8, 9, 0, 3, 5, 11, 12, 13, 9, 12},
};

inline std::vector<EventRecord> phase_medians_log() {
    LogBuilder b(10, "fixture-phases");
    for (int r = 1; r <= 10; ++r) {
        std::vector<LogBuilder::Flow> flows;
        for (std::uint32_t i = 0; i < 3; ++i) {
            const auto v = kPhaseSeries[i][r - 1];
            flows.push_back({AgentId{i}, AgentId{(i + 1) % 3}, v, v});
        }
        b.exchange(r, flows);
    }
    return b.events();
}

// Eight single-type offers in round 1. Holdings while negotiating:
//   Alice (10, 20, 30), Bob (4, 8, 48), Carol (5, 30, 25); every mean is 20.
// Ratio = recipient's holding of the offered type / 20:
//   P1 Carol gives A to Bob    0.20  accepted
//   P2 Bob   gives A to Carol  0.25  accepted
//   P3 Alice gives B to Bob    0.40  accepted
//   P4 Bob   gives A to Alice  0.50  accepted
//   P5 Carol gives B to Alice  1.00  rejected
//   P6 Alice gives C to Carol  1.25  expired
//   P7 Bob   gives C to Alice  1.50  rejected
//   P8 Carol gives C to Bob    2.40  rejected
// Ranks 0-7 -> quartile floor(4i/8): two offers per quartile.
// Expected acceptance: 100%, 100%, 0%, 0% (expired counted as not accepted;
// with expired left out the high quartile is still 0% from P5 alone).
inline std::vector<EventRecord> acceptance_log() {
    LogBuilder b(1, "fixture-acceptance");
    const Holdings during{{10, 20, 30}, {4, 8, 48}, {5, 30, 25}};
    b.injection(1, during);
    struct Offer {
        AgentId from, to;
        ResourceType type;
        ProposalStatus status;
    };
    const std::vector<Offer> offers{
        {kCarol, kBob, 0, ProposalStatus::Accepted},   {kBob, kCarol, 0, ProposalStatus::Accepted},
        {kAlice, kBob, 1, ProposalStatus::Accepted},   {kBob, kAlice, 0, ProposalStatus::Accepted},
        {kCarol, kAlice, 1, ProposalStatus::Rejected}, {kAlice, kCarol, 2, ProposalStatus::Expired},
        {kBob, kAlice, 2, ProposalStatus::Rejected},   {kCarol, kBob, 2, ProposalStatus::Rejected},
    };
    std::vector<Proposal> proposals;
    for (std::size_t i = 0; i < offers.size(); ++i) {
        Proposal p;
        p.proposal_id = make_proposal_id(1, i + 1);
        p.proposer = offers[i].from;
        p.counterpart = offers[i].to;
        p.give = ResourceVector(3);
        p.give[offers[i].type] = 2;
        p.receive = ResourceVector(3);
        p.receive[(offers[i].type + 1) % 3] = 2;
        p.status = offers[i].status;
        p.round = 1;
        proposals.push_back(p);
    }
    b.closed(1, proposals);
    b.exchange(1, {});
    return b.events();
}

// T = 3, window 1.
//   round 1: Alice promised Bob 5, sent 2 (breach 3).  Bob sent Alice 6.
//            Carol promised Alice 10, sent 2 (breach 8). Alice sent Carol 4.
//   round 2: Bob sent Alice 4, Alice sent Carol 5, both as promised.
//            Carol promised Bob 4, sent 0 (breach 4) but Bob sent Carol
//            nothing this round, so there is no base to compare: skipped.
//   round 3: Carol promised Alice 3, sent 1 (breach 2). No round 4: skipped.
// Breach response:
//   (0,5]   Bob toward Alice 6 -> 4:   (4 - 6) / 6 = -33.33...%  (n = 1)
//   (5,10]  Alice toward Carol 4 -> 5: (5 - 4) / 4 = +25%        (n = 1)
//   (10,15] no samples
inline std::vector<EventRecord> breach_response_log() {
    LogBuilder b(3, "fixture-breach");
    b.exchange(1, {{kAlice, kBob, 5, 2}, {kBob, kAlice, 6, 6}, {kCarol, kAlice, 10, 2}, {kAlice, kCarol, 4, 4}});
    b.exchange(2, {{kBob, kAlice, 4, 4}, {kAlice, kCarol, 5, 5}, {kCarol, kBob, 4, 0}});
    b.exchange(3, {{kCarol, kAlice, 3, 1}});
    return b.events();
}

}  // namespace fixture
