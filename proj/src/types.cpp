#include "setsim/types.hpp"

#include <algorithm>
#include <numeric>

#include "setsim/error.hpp"

namespace setsim {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NegativeQuantity: return "NegativeQuantity";
        case ErrorCode::UnknownResourceType: return "UnknownResourceType";
        case ErrorCode::UnknownAgent: return "UnknownAgent";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::CoefficientOrderViolation: return "CoefficientOrderViolation";
        case ErrorCode::EmptyTurnOrder: return "EmptyTurnOrder";
        case ErrorCode::InvalidRound: return "InvalidRound";
        case ErrorCode::NotYourTurn: return "NotYourTurn";
        case ErrorCode::PhaseClosed: return "PhaseClosed";
        case ErrorCode::PhaseStillOpen: return "PhaseStillOpen";
        case ErrorCode::UnknownProposal: return "UnknownProposal";
        case ErrorCode::NotAddressee: return "NotAddressee";
        case ErrorCode::ProposalNotPending: return "ProposalNotPending";
        case ErrorCode::InvalidProposal: return "InvalidProposal";
        case ErrorCode::MissingDecision: return "MissingDecision";
        case ErrorCode::OverCommit: return "OverCommit";
        case ErrorCode::InvalidDecision: return "InvalidDecision";
        case ErrorCode::PolicyTimeout: return "PolicyTimeout";
        case ErrorCode::MalformedDecision: return "MalformedDecision";
        case ErrorCode::MissingTemplateField: return "MissingTemplateField";
        case ErrorCode::PolicyFailure: return "PolicyFailure";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::TransportError: return "TransportError";
        case ErrorCode::CassetteMiss: return "CassetteMiss";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::CorruptLog: return "CorruptLog";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::InvalidPreset: return "InvalidPreset";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::WrongPhase: return "WrongPhase";
        case ErrorCode::InvalidScore: return "InvalidScore";
        case ErrorCode::SessionNotFinished: return "SessionNotFinished";
    }
    return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

Units ResourceVector::total() const noexcept {
    return std::accumulate(quantities_.begin(), quantities_.end(), Units{0});
}

bool ResourceVector::is_zero() const noexcept {
    return std::all_of(quantities_.begin(), quantities_.end(), [](Units q) { return q == 0; });
}

bool ResourceVector::fits_within(const ResourceVector& bound) const {
    if (bound.size() != size()) return false;
    for (std::size_t t = 0; t < size(); ++t) {
        if (quantities_[t] > bound.quantities_[t]) return false;
    }
    return true;
}

ResourceVector& ResourceVector::operator+=(const ResourceVector& other) {
    if (other.size() != size()) {
        fail(ErrorCode::UnknownResourceType, "resource vector size mismatch");
    }
    for (std::size_t t = 0; t < size(); ++t) quantities_[t] += other.quantities_[t];
    return *this;
}

ResourceVector& ResourceVector::operator-=(const ResourceVector& other) {
    if (other.size() != size()) {
        fail(ErrorCode::UnknownResourceType, "resource vector size mismatch");
    }
    if (!other.fits_within(*this)) {
        fail(ErrorCode::OverCommit, "subtraction would make a quantity negative");
    }
    for (std::size_t t = 0; t < size(); ++t) quantities_[t] -= other.quantities_[t];
    return *this;
}

ResourceVector normalize_resource_vector(const std::map<std::int64_t, std::int64_t>& raw,
                                         std::size_t num_types) {
    ResourceVector out(num_types);
    for (const auto& [type, count] : raw) {
        if (type < 0 || static_cast<std::size_t>(type) >= num_types) {
            fail(ErrorCode::UnknownResourceType, "unknown resource type id " + std::to_string(type));
        }
        if (count < 0) {
            fail(ErrorCode::NegativeQuantity, "negative quantity " + std::to_string(count) +
                                                  " for resource type " + std::to_string(type));
        }
        out[static_cast<ResourceType>(type)] = static_cast<Units>(count);
    }
    return out;
}

std::string to_string(SocialValueOrientation svo) {
    return svo == SocialValueOrientation::Proself ? "proself" : "prosocial";
}

SocialValueOrientation parse_svo(std::string_view text) {
    if (text == "proself" || text == "Proself") return SocialValueOrientation::Proself;
    if (text == "prosocial" || text == "Prosocial") return SocialValueOrientation::Prosocial;
    fail(ErrorCode::ConfigError, "unknown svo '" + std::string(text) + "'");
}

std::string to_string(const Controller& controller) {
    switch (controller.kind) {
        case ControllerKind::Llm: return "llm";
        case ControllerKind::Human: return "human";
        case ControllerKind::Scripted: return "scripted:" + controller.policy_name;
    }
    return "";
}

Controller parse_controller(std::string_view text) {
    if (text == "llm") return {ControllerKind::Llm, ""};
    if (text == "human") return {ControllerKind::Human, ""};
    constexpr std::string_view prefix = "scripted:";
    if (text.starts_with(prefix) && text.size() > prefix.size()) {
        return {ControllerKind::Scripted, std::string(text.substr(prefix.size()))};
    }
    fail(ErrorCode::ConfigError, "unknown controller '" + std::string(text) + "'");
}

AffinityLedger::AffinityLedger(std::size_t num_agents, int initial)
    : num_agents_(num_agents), scores_(num_agents * num_agents, initial) {
    if (initial < kMinAffinity || initial > kMaxAffinity) {
        fail(ErrorCode::InvalidScore, "initial affinity out of range");
    }
}

int AffinityLedger::get(AgentId owner, AgentId target) const {
    if (owner.index() >= num_agents_ || target.index() >= num_agents_) {
        fail(ErrorCode::UnknownAgent, "affinity lookup for unknown agent");
    }
    if (owner == target) fail(ErrorCode::InvalidScore, "no self-directed affinity");
    return scores_[owner.index() * num_agents_ + target.index()];
}

void AffinityLedger::set(AgentId owner, AgentId target, int score) {
    if (owner.index() >= num_agents_ || target.index() >= num_agents_) {
        fail(ErrorCode::UnknownAgent, "affinity update for unknown agent");
    }
    if (owner == target) fail(ErrorCode::InvalidScore, "no self-directed affinity");
    if (score < kMinAffinity || score > kMaxAffinity) {
        fail(ErrorCode::InvalidScore, "affinity score " + std::to_string(score) + " outside [1,5]");
    }
    scores_[owner.index() * num_agents_ + target.index()] = score;
}

double AffinityLedger::mean_received(AgentId target) const {
    if (num_agents_ < 2) return 0.0;
    double sum = 0.0;
    for (std::uint32_t owner = 0; owner < num_agents_; ++owner) {
        if (owner == target.value) continue;
        sum += get(AgentId{owner}, target);
    }
    return sum / static_cast<double>(num_agents_ - 1);
}

std::string to_string(ProposalStatus status) {
    switch (status) {
        case ProposalStatus::Pending: return "pending";
        case ProposalStatus::Accepted: return "accepted";
        case ProposalStatus::Rejected: return "rejected";
        case ProposalStatus::Expired: return "expired";
    }
    return "";
}

ProposalStatus parse_proposal_status(std::string_view text) {
    if (text == "pending") return ProposalStatus::Pending;
    if (text == "accepted") return ProposalStatus::Accepted;
    if (text == "rejected") return ProposalStatus::Rejected;
    if (text == "expired") return ProposalStatus::Expired;
    fail(ErrorCode::SchemaMismatch, "unknown proposal status '" + std::string(text) + "'");
}

}  // namespace setsim
