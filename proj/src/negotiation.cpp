#include "setsim/negotiation.hpp"

#include <algorithm>

#include "setsim/error.hpp"

namespace setsim {
namespace {

Proposal& find_mutable(NegotiationState& state, const std::string& proposal_id) {
    for (auto& p : state.proposals) {
        if (p.proposal_id == proposal_id) return p;
    }
    fail(ErrorCode::UnknownProposal, "unknown proposal '" + proposal_id + "'");
}

bool in_turn_order(const NegotiationState& state, AgentId id) {
    return std::find(state.turn_order.begin(), state.turn_order.end(), id) != state.turn_order.end();
}

void respond(NegotiationState& state, AgentId actor, const std::string& proposal_id, ProposalStatus outcome) {
    auto& p = find_mutable(state, proposal_id);
    if (p.counterpart != actor) {
        fail(ErrorCode::NotAddressee, "proposal '" + proposal_id + "' is not addressed to the acting agent");
    }
    if (p.status != ProposalStatus::Pending) {
        fail(ErrorCode::ProposalNotPending, "proposal '" + proposal_id + "' is already " + to_string(p.status));
    }
    p.status = outcome;
}

void close_phase(NegotiationState& state) {
    state.phase_status = PhaseStatus::Closed;
    for (auto& p : state.proposals) {
        if (p.status == ProposalStatus::Pending) p.status = ProposalStatus::Expired;
    }
}

}  // namespace

const Proposal* NegotiationState::find(std::string_view proposal_id) const {
    for (const auto& p : proposals) {
        if (p.proposal_id == proposal_id) return &p;
    }
    return nullptr;
}

std::string make_proposal_id(int round, std::size_t ordinal) {
    return "R" + std::to_string(round) + "-P" + std::to_string(ordinal);
}

NegotiationState open_phase(int round, std::vector<AgentId> turn_order, int max_discussion_rounds,
                            std::size_t num_resource_types) {
    if (turn_order.empty()) fail(ErrorCode::EmptyTurnOrder, "negotiation needs at least one agent");
    if (round < 1) fail(ErrorCode::InvalidRound, "round must be >= 1, got " + std::to_string(round));
    if (max_discussion_rounds < 1) fail(ErrorCode::InvalidRound, "max_discussion_rounds must be >= 1");
    NegotiationState state;
    state.round = round;
    state.max_discussion_rounds = max_discussion_rounds;
    state.num_resource_types = num_resource_types;
    state.turn_order = std::move(turn_order);
    return state;
}

NegotiationState apply_turn(NegotiationState state, AgentId actor, const std::vector<AgentAction>& actions,
                            std::string utterance) {
    if (state.closed()) fail(ErrorCode::PhaseClosed, "negotiation phase is closed");
    if (state.current_actor() != actor) {
        fail(ErrorCode::NotYourTurn, "agent " + std::to_string(actor.value) + " acted out of turn");
    }

    for (const auto& action : actions) {
        if (const auto* propose = std::get_if<ProposeAction>(&action.kind)) {
            if (propose->counterpart == actor) fail(ErrorCode::InvalidProposal, "cannot propose to oneself");
            if (!in_turn_order(state, propose->counterpart)) fail(ErrorCode::UnknownAgent, "unknown counterpart");
            if (propose->give.size() != state.num_resource_types || propose->receive.size() != state.num_resource_types) {
                fail(ErrorCode::InvalidProposal, "proposal vectors must cover every resource type");
            }
            if (propose->give.is_zero() && propose->receive.is_zero()) {
                fail(ErrorCode::InvalidProposal, "proposal gives and receives nothing");
            }
            Proposal p;
            p.proposal_id = make_proposal_id(state.round, state.next_proposal_ordinal++);
            p.proposer = actor;
            p.counterpart = propose->counterpart;
            p.give = propose->give;
            p.receive = propose->receive;
            p.round = state.round;
            p.created_in_discussion_round = state.discussion_round;
            state.proposals.push_back(std::move(p));
        } else if (const auto* accept = std::get_if<AcceptAction>(&action.kind)) {
            respond(state, actor, accept->proposal_id, ProposalStatus::Accepted);
        } else if (const auto* reject = std::get_if<RejectAction>(&action.kind)) {
            respond(state, actor, reject->proposal_id, ProposalStatus::Rejected);
        }
    }

    state.transcript.push_back(Utterance{actor, std::move(utterance), actions, state.discussion_round,
                                         state.transcript.size()});
    if (actions.empty()) {
        state.passed_this_cycle.insert(actor);
    } else {
        state.passed_this_cycle.erase(actor);
    }

    state.current_turn_index = (state.current_turn_index + 1) % state.turn_order.size();
    if (state.passed_this_cycle.size() == state.turn_order.size()) {
        close_phase(state);
    } else if (state.current_turn_index == 0) {
        if (state.discussion_round >= state.max_discussion_rounds) {
            close_phase(state);
        } else {
            ++state.discussion_round;
        }
    }
    return state;
}

PairwiseLedger accepted_deals(const NegotiationState& state) {
    if (!state.closed()) fail(ErrorCode::PhaseStillOpen, "negotiation phase is still open");
    PairwiseLedger ledger;
    auto add = [&](AgentId debtor, AgentId creditor, const ResourceVector& v) {
        if (v.is_zero()) return;
        auto [it, inserted] = ledger.try_emplace({debtor, creditor}, v);
        if (!inserted) it->second += v;
    };
    for (const auto& p : state.proposals) {
        if (p.status != ProposalStatus::Accepted) continue;
        add(p.proposer, p.counterpart, p.give);
        add(p.counterpart, p.proposer, p.receive);
    }
    return ledger;
}

}  // namespace setsim
