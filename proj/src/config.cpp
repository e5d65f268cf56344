#include "setsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "setsim/error.hpp"

namespace setsim {
namespace {

namespace pt = boost::property_tree;

const std::vector<std::string> kDefaultNames{"Alice", "Bob", "Carol", "Dave", "Erin", "Frank", "Grace", "Heidi"};

std::string default_agent_name(std::size_t index) {
    if (index < kDefaultNames.size()) return kDefaultNames[index];
    return "Agent" + std::to_string(index);
}

std::string default_label(std::size_t index) {
    if (index < 26) return std::string(1, static_cast<char>('A' + index));
    return "R" + std::to_string(index);
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto* begin = text.data();
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        fail(ErrorCode::ConfigError, "invalid number for " + key + ": '" + text + "'");
    }
    return value;
}

double parse_real(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::ConfigError, "invalid real for " + key + ": '" + text + "'");
    }
}

ResourceVector parse_holdings(const std::string& text, const ExperimentConfig& cfg) {
    std::map<std::int64_t, std::int64_t> raw;
    if (trim(text).empty()) return ResourceVector(cfg.num_resource_types);
    for (const auto& item : split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            fail(ErrorCode::ConfigError, "holdings entry '" + item + "' is not label:count");
        }
        const auto type = cfg.resource_by_label(trim(item.substr(0, colon)));
        raw[type] = parse_number<std::int64_t>("initial_holdings", trim(item.substr(colon + 1)));
    }
    return normalize_resource_vector(raw, cfg.num_resource_types);
}

void apply_override(pt::ptree& tree, const std::string& override_text) {
    const auto eq = override_text.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ConfigError, "override '" + override_text + "' lacks '='");
    const auto path = trim(override_text.substr(0, eq));
    const auto value = trim(override_text.substr(eq + 1));
    const auto dot = path.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
        fail(ErrorCode::ConfigError, "override key '" + path + "' must be section.key");
    }
    const auto section = path.substr(0, dot);
    const auto key = path.substr(dot + 1);
    auto it = tree.find(section);
    if (it == tree.not_found()) {
        tree.push_back({section, pt::ptree{}});
        it = tree.find(section);
    }
    it->second.put(pt::ptree::path_type(key, '\0'), value);
}

void read_society(const pt::ptree& section, ExperimentConfig& cfg, bool& labels_given) {
    for (const auto& [key, node] : section) {
        const auto value = trim(node.data());
        if (key == "num_agents") cfg.num_agents = parse_number<std::size_t>(key, value);
        else if (key == "num_resource_types") cfg.num_resource_types = parse_number<std::size_t>(key, value);
        else if (key == "resource_labels") { cfg.resource_labels = split(value, ','); labels_given = true; }
        else if (key == "rounds") cfg.rounds = parse_number<int>(key, value);
        else if (key == "injection_per_round") {
            const auto s = parse_number<std::int64_t>(key, value);
            if (s < 0) fail(ErrorCode::ConfigError, "injection_per_round must be >= 0");
            cfg.injection_per_round = static_cast<Units>(s);
        } else if (key == "value_coefficients") {
            cfg.value_coefficients.clear();
            for (const auto& item : split(value, ',')) cfg.value_coefficients.push_back(parse_number<Points>(key, item));
        } else if (key == "max_discussion_rounds") cfg.max_discussion_rounds = parse_number<int>(key, value);
        else if (key == "initial_allocation_mode") cfg.initial_allocation_mode = parse_allocation_mode(value);
        else if (key == "initial_units") cfg.initial_units = parse_number<Units>(key, value);
        else if (key == "rng_seed") cfg.rng_seed = parse_number<std::uint64_t>(key, value);
        else if (key == "repetitions") cfg.repetitions = parse_number<int>(key, value);
        else fail(ErrorCode::ConfigError, "unknown key society." + key);
    }
}

void read_llm(const pt::ptree& section, LlmSettings& llm) {
    for (const auto& [key, node] : section) {
        const auto value = trim(node.data());
        if (key == "provider") llm.provider = value;
        else if (key == "model") llm.model_name = value;
        else if (key == "temperature") llm.temperature = parse_real(key, value);
        else if (key == "max_tokens") llm.max_tokens = parse_number<int>(key, value);
        else if (key == "top_p") llm.top_p = parse_real(key, value);
        else if (key == "endpoint") llm.endpoint_url = value;
        else if (key == "api_key_env") llm.api_key_env_var = value;
        else if (key == "request_timeout_s") llm.request_timeout_s = parse_real(key, value);
        else if (key == "max_retries") llm.max_retries = parse_number<int>(key, value);
        else if (key == "backoff_ms") llm.backoff_base_ms = parse_number<int>(key, value);
        else if (key == "max_in_flight") llm.max_in_flight = parse_number<int>(key, value);
        else if (key == "cassette_mode") llm.cassette_mode = parse_cassette_mode(value);
        else if (key == "cassette_dir") llm.cassette_dir = value;
        else if (key == "prompts_dir") llm.prompts_dir = value;
        else if (key == "input_cost_per_mtok") llm.input_cost_per_mtok = parse_real(key, value);
        else if (key == "output_cost_per_mtok") llm.output_cost_per_mtok = parse_real(key, value);
        else fail(ErrorCode::ConfigError, "unknown key llm." + key);
    }
}

std::string join_numbers(const std::vector<Points>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(values[i]);
    }
    return out;
}

std::string format_real(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string to_string(AllocationMode mode) {
    return mode == AllocationMode::UniformAll ? "uniform_all" : "specialized_only";
}

AllocationMode parse_allocation_mode(std::string_view text) {
    if (text == "uniform_all") return AllocationMode::UniformAll;
    if (text == "specialized_only") return AllocationMode::SpecializedOnly;
    fail(ErrorCode::ConfigError, "unknown initial_allocation_mode '" + std::string(text) + "'");
}

std::string to_string(CassetteMode mode) {
    switch (mode) {
        case CassetteMode::Off: return "off";
        case CassetteMode::Record: return "record";
        case CassetteMode::Replay: return "replay";
    }
    return "off";
}

CassetteMode parse_cassette_mode(std::string_view text) {
    if (text == "off") return CassetteMode::Off;
    if (text == "record") return CassetteMode::Record;
    if (text == "replay") return CassetteMode::Replay;
    fail(ErrorCode::ConfigError, "unknown cassette_mode '" + std::string(text) + "'");
}

std::string check_llm_settings(const LlmSettings& s) {
    if (!(s.temperature >= 0.0 && s.temperature <= 2.0)) return "0 ≤ temperature ≤ 2 fails";
    if (!(s.top_p > 0.0 && s.top_p <= 1.0)) return "0 < top_p ≤ 1 fails";
    if (s.max_tokens < 1) return "max_tokens ≥ 1 fails";
    if (s.max_retries < 0) return "max_retries ≥ 0 fails";
    if (s.max_in_flight < 1) return "max_in_flight ≥ 1 fails";
    if (s.provider != "anthropic" && s.provider != "openai") return "provider must be anthropic or openai";
    if (s.cassette_mode != CassetteMode::Off && s.cassette_dir.empty()) return "cassette_dir required when cassette_mode is set";
    return {};
}

ExperimentConfig ExperimentConfig::reference_default() {
    ExperimentConfig cfg;
    fill_default_agents(cfg);
    return cfg;
}

ResourceType ExperimentConfig::resource_by_label(std::string_view label) const {
    for (std::size_t t = 0; t < resource_labels.size(); ++t) {
        if (resource_labels[t] == label) return static_cast<ResourceType>(t);
    }
    fail(ErrorCode::UnknownResourceType, "unknown resource type '" + std::string(label) + "'");
}

AgentId ExperimentConfig::agent_by_name(std::string_view name) const {
    for (const auto& a : agents) {
        if (a.display_name == name) return a.agent_id;
    }
    fail(ErrorCode::UnknownAgent, "unknown agent '" + std::string(name) + "'");
}

ResourceVector initial_holdings_for(const ExperimentConfig& cfg, ResourceType specialization) {
    ResourceVector h(cfg.num_resource_types);
    if (cfg.initial_allocation_mode == AllocationMode::UniformAll) {
        for (ResourceType t = 0; t < cfg.num_resource_types; ++t) h[t] = cfg.initial_units;
    } else if (specialization < cfg.num_resource_types) {
        h[specialization] = cfg.initial_units;
    }
    return h;
}

void apply_allocation_mode(ExperimentConfig& cfg) {
    for (auto& a : cfg.agents) a.initial_holdings = initial_holdings_for(cfg, a.specialization);
}

void fill_default_agents(ExperimentConfig& cfg) {
    while (cfg.agents.size() < cfg.num_agents) {
        const auto index = cfg.agents.size();
        AgentProfile p;
        p.agent_id = AgentId{static_cast<std::uint32_t>(index)};
        p.display_name = default_agent_name(index);
        p.specialization = static_cast<ResourceType>(index % std::max<std::size_t>(cfg.num_resource_types, 1));
        p.controller = Controller{ControllerKind::Llm, ""};
        p.initial_holdings = initial_holdings_for(cfg, p.specialization);
        cfg.agents.push_back(std::move(p));
    }
}

ValidationReport validate_config(const ExperimentConfig& cfg) {
    ValidationReport report;
    auto& v = report.violations;
    if (cfg.num_agents < 2) v.push_back("M ≥ 2 fails");
    if (cfg.num_resource_types < 2) v.push_back("N ≥ 2 fails");
    if (cfg.rounds < 1) v.push_back("T ≥ 1 fails");
    if (cfg.max_discussion_rounds < 1) v.push_back("max_discussion_rounds ≥ 1 fails");
    if (cfg.repetitions < 1) v.push_back("repetitions ≥ 1 fails");
    if (cfg.resource_labels.size() != cfg.num_resource_types) v.push_back("resource_labels must have N entries");
    if (std::set<std::string>(cfg.resource_labels.begin(), cfg.resource_labels.end()).size() != cfg.resource_labels.size()) {
        v.push_back("resource_labels must be distinct");
    }

    const auto& r = cfg.value_coefficients;
    if (r.size() != cfg.num_resource_types) {
        v.push_back("value_coefficients must have N entries");
    }
    if (!r.empty() && r[0] <= 0) v.push_back("r1 > 0 fails");
    for (std::size_t k = 1; k < r.size(); ++k) {
        if (r[k] <= r[k - 1]) {
            v.push_back("r" + std::to_string(k + 1) + " > r" + std::to_string(k) + " fails");
        }
    }

    if (cfg.agents.size() != cfg.num_agents) v.push_back("agent profiles must number M");
    std::set<std::string> names;
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
        const auto& a = cfg.agents[i];
        const auto who = "agent " + (a.display_name.empty() ? std::to_string(i) : a.display_name);
        if (a.agent_id.index() != i) v.push_back(who + ": agent ids must be dense and ordered");
        if (a.display_name.empty()) v.push_back(who + ": empty display name");
        if (!names.insert(a.display_name).second) v.push_back(who + ": duplicate display name");
        if (a.specialization >= cfg.num_resource_types) v.push_back(who + ": specialization is not a valid resource type");
        if (a.rei_rational < 1 || a.rei_rational > 5) v.push_back(who + ": rei_rational ∈ [1,5] fails");
        if (a.rei_experiential < 1 || a.rei_experiential > 5) v.push_back(who + ": rei_experiential ∈ [1,5] fails");
        if (a.initial_holdings.size() != cfg.num_resource_types) v.push_back(who + ": initial holdings must have N entries");
        if (a.controller.kind == ControllerKind::Scripted && a.controller.policy_name.empty()) {
            v.push_back(who + ": scripted controller needs a policy name");
        }
    }

    if (auto llm = check_llm_settings(cfg.llm); !llm.empty()) v.push_back("llm: " + llm);
    return report;
}

ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorCode::ConfigError, std::string("config parse error: ") + e.what());
    }
    for (const auto& o : overrides) apply_override(tree, o);

    ExperimentConfig cfg;
    cfg.agents.clear();
    bool labels_given = false;
    std::map<std::size_t, const pt::ptree*> agent_sections;
    for (const auto& [section, node] : tree) {
        if (section == "society") read_society(node, cfg, labels_given);
        else if (section == "llm") read_llm(node, cfg.llm);
        else if (section.starts_with("agents.")) {
            agent_sections[parse_number<std::size_t>(section, section.substr(7))] = &node;
        } else fail(ErrorCode::ConfigError, "unknown section [" + section + "]");
    }
    if (!labels_given) {
        cfg.resource_labels.clear();
        for (std::size_t t = 0; t < cfg.num_resource_types; ++t) cfg.resource_labels.push_back(default_label(t));
    }
    if (!tree.get_child_optional(pt::ptree::path_type("society.num_agents", '.')) && !agent_sections.empty()) {
        cfg.num_agents = agent_sections.rbegin()->first + 1;
    }

    const auto total = std::max(cfg.num_agents, agent_sections.empty() ? 0 : agent_sections.rbegin()->first + 1);
    for (std::size_t i = 0; i < total; ++i) {
        AgentProfile p;
        p.agent_id = AgentId{static_cast<std::uint32_t>(i)};
        p.display_name = default_agent_name(i);
        p.specialization = static_cast<ResourceType>(i % std::max<std::size_t>(cfg.num_resource_types, 1));
        p.controller = Controller{ControllerKind::Llm, ""};
        std::string holdings_text;
        bool explicit_holdings = false;
        if (auto it = agent_sections.find(i); it != agent_sections.end()) {
            for (const auto& [key, node] : *it->second) {
                const auto value = trim(node.data());
                if (key == "name") p.display_name = value;
                else if (key == "specialization") p.specialization = cfg.resource_by_label(value);
                else if (key == "svo") p.svo = parse_svo(value);
                else if (key == "rei_rational") p.rei_rational = parse_number<int>(key, value);
                else if (key == "rei_experiential") p.rei_experiential = parse_number<int>(key, value);
                else if (key == "controller") p.controller = parse_controller(value);
                else if (key == "initial_holdings") { holdings_text = value; explicit_holdings = true; }
                else fail(ErrorCode::ConfigError, "unknown key agents." + std::to_string(i) + "." + key);
            }
        }
        p.initial_holdings = explicit_holdings ? parse_holdings(holdings_text, cfg)
                                               : initial_holdings_for(cfg, p.specialization);
        cfg.agents.push_back(std::move(p));
    }
    return cfg;
}

LoadedConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ConfigError, "cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    LoadedConfig loaded;
    loaded.source_text = buf.str();
    loaded.config = parse_config_text(loaded.source_text, overrides);
    return loaded;
}

std::string to_config_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "[society]\n"
       << "num_agents = " << cfg.num_agents << "\n"
       << "num_resource_types = " << cfg.num_resource_types << "\n"
       << "resource_labels = ";
    for (std::size_t t = 0; t < cfg.resource_labels.size(); ++t) os << (t ? "," : "") << cfg.resource_labels[t];
    os << "\n"
       << "rounds = " << cfg.rounds << "\n"
       << "injection_per_round = " << cfg.injection_per_round << "\n"
       << "value_coefficients = " << join_numbers(cfg.value_coefficients) << "\n"
       << "max_discussion_rounds = " << cfg.max_discussion_rounds << "\n"
       << "initial_allocation_mode = " << to_string(cfg.initial_allocation_mode) << "\n"
       << "initial_units = " << cfg.initial_units << "\n"
       << "rng_seed = " << cfg.rng_seed << "\n"
       << "repetitions = " << cfg.repetitions << "\n";
    for (const auto& a : cfg.agents) {
        os << "\n[agents." << a.agent_id.value << "]\n"
           << "name = " << a.display_name << "\n"
           << "specialization = " << cfg.label(a.specialization) << "\n"
           << "svo = " << to_string(a.svo) << "\n"
           << "rei_rational = " << a.rei_rational << "\n"
           << "rei_experiential = " << a.rei_experiential << "\n"
           << "controller = " << to_string(a.controller) << "\n"
           << "initial_holdings = ";
        for (std::size_t t = 0; t < a.initial_holdings.size(); ++t) {
            os << (t ? "," : "") << cfg.label(static_cast<ResourceType>(t)) << ":" << a.initial_holdings[static_cast<ResourceType>(t)];
        }
        os << "\n";
    }
    const auto& l = cfg.llm;
    os << "\n[llm]\n"
       << "provider = " << l.provider << "\n"
       << "model = " << l.model_name << "\n"
       << "temperature = " << format_real(l.temperature) << "\n"
       << "max_tokens = " << l.max_tokens << "\n"
       << "top_p = " << format_real(l.top_p) << "\n"
       << "endpoint = " << l.endpoint_url << "\n"
       << "api_key_env = " << l.api_key_env_var << "\n"
       << "request_timeout_s = " << format_real(l.request_timeout_s) << "\n"
       << "max_retries = " << l.max_retries << "\n"
       << "backoff_ms = " << l.backoff_base_ms << "\n"
       << "max_in_flight = " << l.max_in_flight << "\n"
       << "cassette_mode = " << to_string(l.cassette_mode) << "\n";
    if (!l.cassette_dir.empty()) os << "cassette_dir = " << l.cassette_dir << "\n";
    if (!l.prompts_dir.empty()) os << "prompts_dir = " << l.prompts_dir << "\n";
    os << "input_cost_per_mtok = " << format_real(l.input_cost_per_mtok) << "\n"
       << "output_cost_per_mtok = " << format_real(l.output_cost_per_mtok) << "\n";
    return os.str();
}

std::string format_resources(const ResourceVector& v, const ExperimentConfig& cfg) {
    std::string out = "{";
    for (std::size_t t = 0; t < v.size(); ++t) {
        if (t) out += ", ";
        out += (t < cfg.resource_labels.size() ? cfg.resource_labels[t] : std::to_string(t));
        out += ": " + std::to_string(v[static_cast<ResourceType>(t)]);
    }
    return out + "}";
}

}  // namespace setsim
