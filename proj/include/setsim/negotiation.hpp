#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

#include "setsim/types.hpp"

namespace setsim {

struct ProposeAction {
    AgentId counterpart;
    ResourceVector give;
    ResourceVector receive;

    bool operator==(const ProposeAction&) const = default;
};

struct AcceptAction {
    std::string proposal_id;
    bool operator==(const AcceptAction&) const = default;
};

struct RejectAction {
    std::string proposal_id;
    bool operator==(const RejectAction&) const = default;
};

// A turn with an empty action list is a pass.
struct AgentAction {
    std::variant<ProposeAction, AcceptAction, RejectAction> kind;
    std::string rationale;

    bool operator==(const AgentAction&) const = default;
};

struct Utterance {
    AgentId speaker;
    std::string text;
    std::vector<AgentAction> actions;
    int discussion_round{1};
    std::size_t ordinal{0};

    bool operator==(const Utterance&) const = default;
};

enum class PhaseStatus { Open, Closed };

struct NegotiationState {
    int round{1};
    int discussion_round{1};
    int max_discussion_rounds{3};
    std::size_t num_resource_types{0};
    std::vector<AgentId> turn_order;
    std::size_t current_turn_index{0};
    std::vector<Proposal> proposals;
    std::vector<Utterance> transcript;
    // Agents whose latest turn was a pass. Reaching every agent means one
    // full consecutive cycle of passes.
    std::set<AgentId> passed_this_cycle;
    PhaseStatus phase_status{PhaseStatus::Open};
    std::size_t next_proposal_ordinal{1};

    AgentId current_actor() const { return turn_order.at(current_turn_index); }
    bool closed() const noexcept { return phase_status == PhaseStatus::Closed; }
    const Proposal* find(std::string_view proposal_id) const;
    bool operator==(const NegotiationState&) const = default;
};

// Errors: EmptyTurnOrder, InvalidRound.
NegotiationState open_phase(int round, std::vector<AgentId> turn_order, int max_discussion_rounds,
                            std::size_t num_resource_types);

// Applies one turn atomically: either every action is applied or the input
// state is left as it was and an error is thrown (NotYourTurn, PhaseClosed,
// UnknownProposal, NotAddressee, ProposalNotPending, InvalidProposal).
NegotiationState apply_turn(NegotiationState state, AgentId actor, const std::vector<AgentAction>& actions,
                            std::string utterance);

// Merged promises per ordered (debtor, creditor) pair over every accepted
// proposal. Errors: PhaseStillOpen.
PairwiseLedger accepted_deals(const NegotiationState& state);

std::string make_proposal_id(int round, std::size_t ordinal);

}  // namespace setsim
