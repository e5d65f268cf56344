#pragma once

#include <json.hpp>

#include "setsim/config.hpp"
#include "setsim/exchange.hpp"
#include "setsim/negotiation.hpp"

namespace setsim {

// Insertion-ordered so every serialized record has a fixed field order.
using Json = nlohmann::ordered_json;

// Agents are referenced by display name and resources by label in every
// JSON surface (event log, LLM responses, HTTP API).
Json to_json(const ResourceVector& v, const ExperimentConfig& cfg);
// Missing labels are zero. Errors: UnknownResourceType, NegativeQuantity,
// InvalidDecision (non-integer counts).
ResourceVector resources_from_json(const Json& j, const ExperimentConfig& cfg);

Json to_json(const Proposal& p, const ExperimentConfig& cfg);
Proposal proposal_from_json(const Json& j, const ExperimentConfig& cfg);

Json to_json(const AgentAction& a, const ExperimentConfig& cfg, bool include_rationale = true);
AgentAction action_from_json(const Json& j, const ExperimentConfig& cfg);

Json to_json(const Utterance& u, const ExperimentConfig& cfg, bool include_rationale = true);

Json to_json(const PairwiseLedger& ledger, const ExperimentConfig& cfg);
PairwiseLedger ledger_from_json(const Json& j, const ExperimentConfig& cfg);

Json to_json(const BreachRecord& b, const ExperimentConfig& cfg);
Json to_json(const RoundOutcome& o, const ExperimentConfig& cfg);

Json to_json(const AllocationDecision& d, const ExperimentConfig& cfg, bool include_rationale = true);
AllocationDecision allocation_from_json(const Json& j, const ExperimentConfig& cfg);

Json to_json(const BdiState& b);
BdiState bdi_from_json(const Json& j);

Json to_json(const AffinityLedger& a, const ExperimentConfig& cfg);
AffinityLedger affinity_from_json(const Json& j, const ExperimentConfig& cfg);

Json holdings_to_json(const Holdings& h, const ExperimentConfig& cfg);
Holdings holdings_from_json(const Json& j, const ExperimentConfig& cfg);

Json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const Json& j);

}  // namespace setsim
