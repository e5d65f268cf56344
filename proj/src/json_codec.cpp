#include "setsim/json_codec.hpp"

#include "setsim/error.hpp"

namespace setsim {
namespace {

const std::string& name_of(AgentId id, const ExperimentConfig& cfg) {
    if (id.index() >= cfg.agents.size()) fail(ErrorCode::UnknownAgent, "agent id out of range");
    return cfg.agents[id.index()].display_name;
}

AgentId agent_from_json(const Json& j, const ExperimentConfig& cfg) {
    if (!j.is_string()) fail(ErrorCode::UnknownAgent, "agent reference must be a name string");
    return cfg.agent_by_name(j.get<std::string>());
}

std::string string_field(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

}  // namespace

Json to_json(const ResourceVector& v, const ExperimentConfig& cfg) {
    Json j = Json::object();
    for (std::size_t t = 0; t < v.size(); ++t) {
        j[cfg.label(static_cast<ResourceType>(t))] = v[static_cast<ResourceType>(t)];
    }
    return j;
}

ResourceVector resources_from_json(const Json& j, const ExperimentConfig& cfg) {
    if (j.is_null()) return ResourceVector(cfg.num_resource_types);
    if (!j.is_object()) fail(ErrorCode::InvalidDecision, "resource bundle must be an object of label: count");
    std::map<std::int64_t, std::int64_t> raw;
    for (const auto& [label, count] : j.items()) {
        const auto type = cfg.resource_by_label(label);
        if (!count.is_number_integer()) {
            fail(ErrorCode::InvalidDecision, "quantity for '" + label + "' must be an integer");
        }
        raw[type] = count.get<std::int64_t>();
    }
    return normalize_resource_vector(raw, cfg.num_resource_types);
}

Json to_json(const Proposal& p, const ExperimentConfig& cfg) {
    return Json{{"proposal_id", p.proposal_id},
                {"proposer", name_of(p.proposer, cfg)},
                {"counterpart", name_of(p.counterpart, cfg)},
                {"give", to_json(p.give, cfg)},
                {"receive", to_json(p.receive, cfg)},
                {"status", to_string(p.status)},
                {"round", p.round},
                {"discussion_round", p.created_in_discussion_round}};
}

Proposal proposal_from_json(const Json& j, const ExperimentConfig& cfg) {
    Proposal p;
    p.proposal_id = j.at("proposal_id").get<std::string>();
    p.proposer = agent_from_json(j.at("proposer"), cfg);
    p.counterpart = agent_from_json(j.at("counterpart"), cfg);
    p.give = resources_from_json(j.at("give"), cfg);
    p.receive = resources_from_json(j.at("receive"), cfg);
    p.status = parse_proposal_status(j.at("status").get<std::string>());
    p.round = j.at("round").get<int>();
    p.created_in_discussion_round = j.at("discussion_round").get<int>();
    return p;
}

Json to_json(const AgentAction& a, const ExperimentConfig& cfg, bool include_rationale) {
    Json j;
    if (const auto* p = std::get_if<ProposeAction>(&a.kind)) {
        j = Json{{"type", "PROPOSE"},
                 {"to", name_of(p->counterpart, cfg)},
                 {"give", to_json(p->give, cfg)},
                 {"receive", to_json(p->receive, cfg)}};
    } else if (const auto* acc = std::get_if<AcceptAction>(&a.kind)) {
        j = Json{{"type", "ACCEPT"}, {"proposal_id", acc->proposal_id}};
    } else if (const auto* rej = std::get_if<RejectAction>(&a.kind)) {
        j = Json{{"type", "REJECT"}, {"proposal_id", rej->proposal_id}};
    }
    if (include_rationale && !a.rationale.empty()) j["rationale"] = a.rationale;
    return j;
}

AgentAction action_from_json(const Json& j, const ExperimentConfig& cfg) {
    if (!j.is_object()) fail(ErrorCode::InvalidDecision, "action must be an object");
    const auto type = string_field(j, "type");
    AgentAction a;
    a.rationale = string_field(j, "rationale");
    if (type == "PROPOSE") {
        const auto to = j.find("to");
        if (to == j.end()) fail(ErrorCode::InvalidDecision, "PROPOSE needs a 'to' agent");
        a.kind = ProposeAction{agent_from_json(*to, cfg),
                               resources_from_json(j.value("give", Json()), cfg),
                               resources_from_json(j.value("receive", Json()), cfg)};
    } else if (type == "ACCEPT" || type == "REJECT") {
        const auto id = string_field(j, "proposal_id");
        if (id.empty()) fail(ErrorCode::InvalidDecision, type + " needs a proposal_id");
        if (type == "ACCEPT") a.kind = AcceptAction{id};
        else a.kind = RejectAction{id};
    } else {
        fail(ErrorCode::InvalidDecision, "unknown action type '" + type + "'");
    }
    return a;
}

Json to_json(const Utterance& u, const ExperimentConfig& cfg, bool include_rationale) {
    Json actions = Json::array();
    for (const auto& a : u.actions) actions.push_back(to_json(a, cfg, include_rationale));
    return Json{{"ordinal", u.ordinal},
                {"speaker", name_of(u.speaker, cfg)},
                {"discussion_round", u.discussion_round},
                {"text", u.text},
                {"actions", std::move(actions)}};
}

Json to_json(const PairwiseLedger& ledger, const ExperimentConfig& cfg) {
    Json j = Json::array();
    for (const auto& [key, v] : ledger) {
        j.push_back(Json{{"from", name_of(key.first, cfg)}, {"to", name_of(key.second, cfg)}, {"units", to_json(v, cfg)}});
    }
    return j;
}

PairwiseLedger ledger_from_json(const Json& j, const ExperimentConfig& cfg) {
    PairwiseLedger ledger;
    for (const auto& row : j) {
        ledger[{agent_from_json(row.at("from"), cfg), agent_from_json(row.at("to"), cfg)}] =
            resources_from_json(row.at("units"), cfg);
    }
    return ledger;
}

Json to_json(const BreachRecord& b, const ExperimentConfig& cfg) {
    return Json{{"debtor", name_of(b.debtor, cfg)},
                {"creditor", name_of(b.creditor, cfg)},
                {"promised", to_json(b.promised, cfg)},
                {"delivered", to_json(b.delivered, cfg)},
                {"signed_breach", b.signed_breach},
                {"class", to_string(b.delivery_class())}};
}

Json to_json(const RoundOutcome& o, const ExperimentConfig& cfg) {
    Json breaches = Json::array();
    for (const auto& b : o.breaches) breaches.push_back(to_json(b, cfg));
    Json values = Json::object();
    for (std::size_t i = 0; i < o.holding_values_after.size(); ++i) {
        values[cfg.agents.at(i).display_name] = o.holding_values_after[i];
    }
    return Json{{"promised", to_json(o.promised, cfg)},
                {"delivered", to_json(o.delivered, cfg)},
                {"breaches", std::move(breaches)},
                {"holdings_after", holdings_to_json(o.holdings_after, cfg)},
                {"holding_values_after", std::move(values)}};
}

Json to_json(const AllocationDecision& d, const ExperimentConfig& cfg, bool include_rationale) {
    Json outgoing = Json::object();
    for (const auto& [target, v] : d.outgoing) outgoing[name_of(target, cfg)] = to_json(v, cfg);
    Json j{{"actor", name_of(d.actor, cfg)}, {"outgoing", std::move(outgoing)}, {"clamped", d.clamped}};
    if (include_rationale) j["rationale"] = d.rationale;
    return j;
}

AllocationDecision allocation_from_json(const Json& j, const ExperimentConfig& cfg) {
    AllocationDecision d;
    d.actor = agent_from_json(j.at("actor"), cfg);
    for (const auto& [name, v] : j.at("outgoing").items()) d.outgoing[cfg.agent_by_name(name)] = resources_from_json(v, cfg);
    d.rationale = string_field(j, "rationale");
    d.clamped = j.value("clamped", false);
    return d;
}

Json to_json(const BdiState& b) {
    return Json{{"beliefs", b.beliefs}, {"desires", b.desires}, {"intentions", b.intentions},
                {"updated_at_round", b.updated_at_round}};
}

BdiState bdi_from_json(const Json& j) {
    return BdiState{string_field(j, "beliefs"), string_field(j, "desires"), string_field(j, "intentions"),
                    j.value("updated_at_round", 0)};
}

Json to_json(const AffinityLedger& a, const ExperimentConfig& cfg) {
    Json j = Json::object();
    for (std::uint32_t owner = 0; owner < a.num_agents(); ++owner) {
        Json row = Json::object();
        for (std::uint32_t target = 0; target < a.num_agents(); ++target) {
            if (owner == target) continue;
            row[name_of(AgentId{target}, cfg)] = a.get(AgentId{owner}, AgentId{target});
        }
        j[name_of(AgentId{owner}, cfg)] = std::move(row);
    }
    return j;
}

AffinityLedger affinity_from_json(const Json& j, const ExperimentConfig& cfg) {
    AffinityLedger ledger(cfg.agents.size());
    for (const auto& [owner, row] : j.items()) {
        for (const auto& [target, score] : row.items()) {
            ledger.set(cfg.agent_by_name(owner), cfg.agent_by_name(target), score.get<int>());
        }
    }
    return ledger;
}

Json holdings_to_json(const Holdings& h, const ExperimentConfig& cfg) {
    Json j = Json::object();
    for (std::size_t i = 0; i < h.size(); ++i) j[cfg.agents.at(i).display_name] = to_json(h[i], cfg);
    return j;
}

Holdings holdings_from_json(const Json& j, const ExperimentConfig& cfg) {
    Holdings h(cfg.agents.size(), ResourceVector(cfg.num_resource_types));
    for (const auto& [name, v] : j.items()) h[cfg.agent_by_name(name).index()] = resources_from_json(v, cfg);
    return h;
}

Json to_json(const ExperimentConfig& cfg) {
    Json agents = Json::array();
    for (const auto& a : cfg.agents) {
        agents.push_back(Json{{"name", a.display_name},
                              {"specialization", cfg.label(a.specialization)},
                              {"svo", to_string(a.svo)},
                              {"rei_rational", a.rei_rational},
                              {"rei_experiential", a.rei_experiential},
                              {"controller", to_string(a.controller)},
                              {"initial_holdings", to_json(a.initial_holdings, cfg)}});
    }
    const auto& l = cfg.llm;
    return Json{{"num_agents", cfg.num_agents},
                {"num_resource_types", cfg.num_resource_types},
                {"resource_labels", cfg.resource_labels},
                {"rounds", cfg.rounds},
                {"injection_per_round", cfg.injection_per_round},
                {"value_coefficients", cfg.value_coefficients},
                {"max_discussion_rounds", cfg.max_discussion_rounds},
                {"initial_allocation_mode", to_string(cfg.initial_allocation_mode)},
                {"initial_units", cfg.initial_units},
                {"rng_seed", cfg.rng_seed},
                {"repetitions", cfg.repetitions},
                {"agents", std::move(agents)},
                {"llm", Json{{"provider", l.provider},
                             {"model", l.model_name},
                             {"temperature", l.temperature},
                             {"max_tokens", l.max_tokens},
                             {"top_p", l.top_p}}}};
}

ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig cfg;
    cfg.num_agents = j.at("num_agents").get<std::size_t>();
    cfg.num_resource_types = j.at("num_resource_types").get<std::size_t>();
    cfg.resource_labels = j.at("resource_labels").get<std::vector<std::string>>();
    cfg.rounds = j.at("rounds").get<int>();
    cfg.injection_per_round = j.at("injection_per_round").get<Units>();
    cfg.value_coefficients = j.at("value_coefficients").get<std::vector<Points>>();
    cfg.max_discussion_rounds = j.at("max_discussion_rounds").get<int>();
    cfg.initial_allocation_mode = parse_allocation_mode(j.at("initial_allocation_mode").get<std::string>());
    cfg.initial_units = j.at("initial_units").get<Units>();
    cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    cfg.repetitions = j.at("repetitions").get<int>();
    cfg.agents.clear();
    std::uint32_t index = 0;
    for (const auto& a : j.at("agents")) {
        AgentProfile p;
        p.agent_id = AgentId{index++};
        p.display_name = a.at("name").get<std::string>();
        p.specialization = cfg.resource_by_label(a.at("specialization").get<std::string>());
        p.svo = parse_svo(a.at("svo").get<std::string>());
        p.rei_rational = a.at("rei_rational").get<int>();
        p.rei_experiential = a.at("rei_experiential").get<int>();
        p.controller = parse_controller(a.at("controller").get<std::string>());
        cfg.agents.push_back(std::move(p));
    }
    // Holdings decode needs the agent names in place first.
    std::size_t i = 0;
    for (const auto& a : j.at("agents")) {
        cfg.agents[i++].initial_holdings = resources_from_json(a.at("initial_holdings"), cfg);
    }
    if (const auto llm = j.find("llm"); llm != j.end()) {
        cfg.llm.provider = llm->value("provider", cfg.llm.provider);
        cfg.llm.model_name = llm->value("model", cfg.llm.model_name);
        cfg.llm.temperature = llm->value("temperature", cfg.llm.temperature);
        cfg.llm.max_tokens = llm->value("max_tokens", cfg.llm.max_tokens);
        cfg.llm.top_p = llm->value("top_p", cfg.llm.top_p);
    }
    return cfg;
}

}  // namespace setsim
