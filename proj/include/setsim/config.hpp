#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "setsim/llm_settings.hpp"
#include "setsim/types.hpp"

namespace setsim {

enum class AllocationMode {
    UniformAll,       // initial_units of every type
    SpecializedOnly,  // initial_units of the agent's own type only
};

std::string to_string(AllocationMode mode);
AllocationMode parse_allocation_mode(std::string_view text);

struct ExperimentConfig {
    std::size_t num_agents{3};
    std::size_t num_resource_types{3};
    std::vector<std::string> resource_labels{"A", "B", "C"};
    int rounds{10};
    Units injection_per_round{15};
    // Points per combination of k distinct types, k = 1..N.
    std::vector<Points> value_coefficients{1, 4, 9};
    int max_discussion_rounds{3};
    AllocationMode initial_allocation_mode{AllocationMode::UniformAll};
    Units initial_units{5};
    std::uint64_t rng_seed{0};
    int repetitions{5};
    std::vector<AgentProfile> agents;
    LlmSettings llm;

    // M = N = 3, T = 10, S = 15, r = (1, 4, 9), three discussion rounds,
    // five repetitions; agents Alice/Bob/Carol specialized in A/B/C.
    static ExperimentConfig reference_default();

    const std::string& label(ResourceType t) const { return resource_labels.at(t); }
    ResourceType resource_by_label(std::string_view label) const;  // UnknownResourceType
    AgentId agent_by_name(std::string_view name) const;             // UnknownAgent
    const AgentProfile& agent(AgentId id) const { return agents.at(id.index()); }

    bool operator==(const ExperimentConfig&) const = default;
};

ResourceVector initial_holdings_for(const ExperimentConfig& cfg, ResourceType specialization);

// Rebuilds every agent's initial holdings from the allocation mode.
void apply_allocation_mode(ExperimentConfig& cfg);

// Generates default profiles until agents.size() == num_agents.
void fill_default_agents(ExperimentConfig& cfg);

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_config(const ExperimentConfig& cfg);

// Key-value config file: sections [society], [agents.K] and [llm].
// Overrides are "section.key=value" strings applied on top of the file.
struct LoadedConfig {
    ExperimentConfig config;
    std::string source_text;  // exact bytes read, kept for provenance
};

LoadedConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {});
std::string to_config_text(const ExperimentConfig& cfg);

std::string format_resources(const ResourceVector& v, const ExperimentConfig& cfg);

}  // namespace setsim
