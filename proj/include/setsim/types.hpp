#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace setsim {

using Units = std::uint64_t;   // whole resource units; resources are indivisible
using Points = std::int64_t;   // scoring points
using ResourceType = std::uint32_t;

struct AgentId {
    std::uint32_t value{0};

    constexpr auto operator<=>(const AgentId&) const = default;
    constexpr std::size_t index() const noexcept { return value; }
};

// Per-type unit counts. Always dense: exactly N entries, one per resource
// type id 0..N-1.
class ResourceVector {
public:
    ResourceVector() = default;
    explicit ResourceVector(std::size_t num_types) : quantities_(num_types, 0) {}
    explicit ResourceVector(std::vector<Units> quantities) : quantities_(std::move(quantities)) {}
    ResourceVector(std::initializer_list<Units> quantities) : quantities_(quantities) {}

    std::size_t size() const noexcept { return quantities_.size(); }
    Units operator[](ResourceType t) const { return quantities_.at(t); }
    Units& operator[](ResourceType t) { return quantities_.at(t); }
    std::span<const Units> values() const noexcept { return quantities_; }

    Units total() const noexcept;
    bool is_zero() const noexcept;
    // Component-wise <=.
    bool fits_within(const ResourceVector& bound) const;

    ResourceVector& operator+=(const ResourceVector& other);
    // Throws OverCommit when any component would go negative.
    ResourceVector& operator-=(const ResourceVector& other);

    friend ResourceVector operator+(ResourceVector lhs, const ResourceVector& rhs) { return lhs += rhs; }
    friend ResourceVector operator-(ResourceVector lhs, const ResourceVector& rhs) { return lhs -= rhs; }
    auto operator<=>(const ResourceVector&) const = default;

private:
    std::vector<Units> quantities_;
};

// Zero-fills absent types. Raw counts are signed so negative input can be
// reported rather than wrapped.
ResourceVector normalize_resource_vector(const std::map<std::int64_t, std::int64_t>& raw,
                                         std::size_t num_types);

enum class SocialValueOrientation { Proself, Prosocial };

enum class ControllerKind { Scripted, Llm, Human };

struct Controller {
    ControllerKind kind{ControllerKind::Scripted};
    std::string policy_name;  // scripted only, e.g. "honest-reciprocator"

    bool operator==(const Controller&) const = default;
};

std::string to_string(SocialValueOrientation svo);
std::string to_string(const Controller& controller);
SocialValueOrientation parse_svo(std::string_view text);
Controller parse_controller(std::string_view text);

struct AgentProfile {
    AgentId agent_id;
    std::string display_name;
    ResourceType specialization{0};
    SocialValueOrientation svo{SocialValueOrientation::Prosocial};
    int rei_rational{3};
    int rei_experiential{3};
    ResourceVector initial_holdings;
    Controller controller;

    bool operator==(const AgentProfile&) const = default;
};

inline constexpr int kMinAffinity = 1;
inline constexpr int kMaxAffinity = 5;
inline constexpr int kNeutralAffinity = 3;

// Directed 1..5 scores, owner -> target, no self entries.
class AffinityLedger {
public:
    AffinityLedger() = default;
    explicit AffinityLedger(std::size_t num_agents, int initial = kNeutralAffinity);

    std::size_t num_agents() const noexcept { return num_agents_; }
    int get(AgentId owner, AgentId target) const;
    // Throws InvalidScore for out-of-range scores or self-directed entries.
    void set(AgentId owner, AgentId target, int score);
    // Mean of every other agent's score toward target.
    double mean_received(AgentId target) const;

    bool operator==(const AffinityLedger&) const = default;

private:
    std::size_t num_agents_{0};
    std::vector<int> scores_;
};

struct BdiState {
    std::string beliefs;
    std::string desires;
    std::string intentions;
    int updated_at_round{0};

    bool operator==(const BdiState&) const = default;
};

enum class ProposalStatus { Pending, Accepted, Rejected, Expired };

std::string to_string(ProposalStatus status);
ProposalStatus parse_proposal_status(std::string_view text);

struct Proposal {
    std::string proposal_id;
    AgentId proposer;
    AgentId counterpart;
    ResourceVector give;     // proposer -> counterpart
    ResourceVector receive;  // counterpart -> proposer
    ProposalStatus status{ProposalStatus::Pending};
    int round{0};
    int created_in_discussion_round{1};

    bool operator==(const Proposal&) const = default;
};

// Directed (debtor, creditor) -> units. Used both for promises and for
// actual deliveries.
using PairwiseLedger = std::map<std::pair<AgentId, AgentId>, ResourceVector>;

// Per-agent holdings, indexed by AgentId::value.
using Holdings = std::vector<ResourceVector>;

}  // namespace setsim
