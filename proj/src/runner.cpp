#include "setsim/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "setsim/error.hpp"
#include "setsim/llm_policy.hpp"
#include "setsim/scoring.hpp"
#include "setsim/scripted.hpp"

namespace setsim {
namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

Json usage_json(const UsageTotals& u) {
    return Json{{"requests", u.requests},           {"network_calls", u.network_calls},
                {"cassette_hits", u.cassette_hits}, {"input_tokens", u.input_tokens},
                {"output_tokens", u.output_tokens}, {"estimated_cost_usd", u.estimated_cost_usd}};
}

void add_usage(UsageTotals& into, const UsageTotals& u) {
    into.requests += u.requests;
    into.network_calls += u.network_calls;
    into.cassette_hits += u.cassette_hits;
    into.input_tokens += u.input_tokens;
    into.output_tokens += u.output_tokens;
    into.estimated_cost_usd += u.estimated_cost_usd;
}

RepetitionResult run_repetition(const std::shared_ptr<const ExperimentConfig>& cfg, Roster roster,
                                const std::string& run_id, int rep, const std::string& out_dir) {
    RepetitionResult result;
    result.repetition_index = rep;
    GameEngine engine(cfg, roster.policies, EngineOptions{run_id, rep});
    std::unique_ptr<EventLogWriter> writer;
    if (!out_dir.empty()) {
        result.log_path = (std::filesystem::path(out_dir) / ("rep-" + std::to_string(rep) + ".ndjson")).string();
        writer = std::make_unique<EventLogWriter>(result.log_path);
        engine.set_listener([&writer](const EventRecord& e) { writer->write(e); });
    }
    try {
        engine.run_to_completion();
    } catch (const Error& e) {
        result.error = e.what();
    }
    result.status = engine.status();
    if (result.status == RunStatus::Running) result.status = RunStatus::Failed;
    result.final_holdings = engine.holdings();
    for (const auto& h : engine.holdings()) result.final_values.push_back(holding_value(h, cfg->value_coefficients).total_points);
    if (roster.client) result.usage = roster.client->usage();
    result.events = engine.events();
    return result;
}

}  // namespace

Roster make_roster(const ExperimentConfig& cfg, bool allow_human) {
    Roster roster;
    std::shared_ptr<const PromptLibrary> prompts;
    for (const auto& a : cfg.agents) {
        switch (a.controller.kind) {
            case ControllerKind::Scripted:
                roster.policies.push_back(make_scripted_policy(a.controller.policy_name));
                break;
            case ControllerKind::Llm:
                if (!roster.client) {
                    roster.client = std::make_shared<LlmClient>(cfg.llm);
                    prompts = std::make_shared<const PromptLibrary>(PromptLibrary::load(cfg.llm.prompts_dir));
                }
                roster.policies.push_back(std::make_shared<LlmPolicy>(roster.client, prompts));
                break;
            case ControllerKind::Human:
                if (allow_human) {
                    roster.policies.push_back(std::make_shared<HumanBridgePolicy>());
                    break;
                }
                fail(ErrorCode::ConfigError, a.display_name + " is a human seat; use the session service");
        }
    }
    return roster;
}

Json RunManifest::to_json() const {
    Json j;
    j["run_id"] = run_id;
    j["status"] = setsim::to_string(status);
    j["seed"] = config.rng_seed;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["config"] = setsim::to_json(config);
    j["config_text"] = config_text;
    j["overrides"] = overrides;
    j["roster"] = Json::array();
    for (std::size_t i = 0; i < roster.size(); ++i) {
        j["roster"].push_back({{"agent", config.agents.at(i).display_name}, {"policy", roster[i]}});
    }
    j["usage"] = usage_json(usage);
    j["repetitions"] = Json::array();
    for (const auto& r : repetitions) {
        Json values = Json::object();
        for (std::size_t i = 0; i < r.final_values.size(); ++i) values[config.agents.at(i).display_name] = r.final_values[i];
        Json rep{{"repetition_index", r.repetition_index}, {"status", setsim::to_string(r.status)},
                 {"log", r.log_path}, {"final_values", values}, {"usage", usage_json(r.usage)}};
        if (!r.error.empty()) rep["error"] = r.error;
        j["repetitions"].push_back(std::move(rep));
    }
    return j;
}

RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    return run_experiment(cfg, [&cfg](int) { return make_roster(cfg); }, options);
}

RunManifest run_experiment(const ExperimentConfig& cfg, const RosterFactory& factory, const RunOptions& options) {
    if (const auto report = validate_config(cfg); !report.ok()) {
        fail(ErrorCode::ConfigError, "invalid config: " + report.violations.front());
    }
    RunManifest manifest;
    manifest.run_id = options.run_id.empty() ? "seed-" + std::to_string(cfg.rng_seed) : options.run_id;
    manifest.config = cfg;
    manifest.config_text = options.config_text.empty() ? to_config_text(cfg) : options.config_text;
    manifest.overrides = options.overrides;
    manifest.started_at = utc_now();
    if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

    const auto shared = std::make_shared<const ExperimentConfig>(cfg);
    std::vector<Roster> rosters;
    for (int rep = 0; rep < cfg.repetitions; ++rep) rosters.push_back(factory(rep));
    for (const auto& p : rosters.front().policies) manifest.roster.push_back(p->name());

    if (options.parallel_repetitions) {
        std::vector<std::future<RepetitionResult>> futures;
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            futures.push_back(std::async(std::launch::async, run_repetition, shared, rosters[rep], manifest.run_id, rep,
                                         options.out_dir));
        }
        for (auto& f : futures) manifest.repetitions.push_back(f.get());
    } else {
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            manifest.repetitions.push_back(run_repetition(shared, rosters[rep], manifest.run_id, rep, options.out_dir));
            if (manifest.repetitions.back().status == RunStatus::Failed) break;
        }
    }

    manifest.status = RunStatus::Completed;
    for (const auto& r : manifest.repetitions) {
        add_usage(manifest.usage, r.usage);
        if (r.status != RunStatus::Completed) manifest.status = RunStatus::Failed;
    }
    manifest.finished_at = utc_now();

    if (!options.out_dir.empty()) {
        const std::filesystem::path dir(options.out_dir);
        {
            std::ofstream cfg_out(dir / "config.ini", std::ios::binary | std::ios::trunc);
            cfg_out << manifest.config_text;
        }
        manifest.manifest_path = (dir / "manifest.json").string();
        std::ofstream out(manifest.manifest_path, std::ios::trunc);
        out << manifest.to_json().dump(2) << '\n';
    }
    return manifest;
}

}  // namespace setsim
