#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <iostream>

#include "setsim/analysis.hpp"
#include "setsim/http_api.hpp"
#include "setsim/runner.hpp"
#include "setsim/scoring.hpp"

using namespace setsim;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

LoadedConfig load(const std::string& path, const std::vector<std::string>& overrides) {
    if (path.empty()) {
        LoadedConfig loaded;
        loaded.config = parse_config_text("", overrides);
        loaded.source_text = to_config_text(loaded.config);
        return loaded;
    }
    return load_config_file(path, overrides);
}

int report(const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
}

PhaseSegmentation parse_phases(const std::string& text) {
    const auto parts = split(text, ',');
    if (parts.size() != 3) throw CLI::ValidationError("--phases", "needs three ranges like 1-2,3-8,9-10");
    PhaseSegmentation seg;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto ends = split(parts[i], '-');
        if (ends.size() != 2) throw CLI::ValidationError("--phases", "bad range '" + parts[i] + "'");
        seg.ranges[i] = {std::stoi(ends[0]), std::stoi(ends[1])};
    }
    return seg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent social exchange simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run an experiment and write one event log per repetition");
    std::string config_path, out_dir = "out", roster, cassette, cassette_dir, run_id;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> repetitions;
    bool parallel = false;
    run->add_option("-c,--config", config_path, "Config file (INI); defaults apply when omitted");
    run->add_option("--set", sets, "Override a config key, e.g. society.rounds=20 (repeatable)");
    run->add_option("--seed", seed, "Master seed (society.rng_seed)");
    run->add_option("--repetitions", repetitions, "Number of repetitions (society.repetitions)");
    run->add_option("--roster", roster, "Comma-separated controllers per agent, e.g. scripted:pass-bot,llm,llm");
    run->add_option("--cassette", cassette, "LLM cassette mode: off, record or replay")->check(CLI::IsMember({"off", "record", "replay"}));
    run->add_option("--cassette-dir", cassette_dir, "Directory of LLM recordings");
    run->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--run-id", run_id, "Run identifier written into every event");
    run->add_flag("--parallel", parallel, "Run repetitions concurrently");

    // replay / validate-log
    auto* replay = app.add_subcommand("replay", "Re-derive a run from its event log and print the final state");
    std::string replay_path;
    replay->add_option("log", replay_path, "Event log (.ndjson)")->required();

    auto* validate = app.add_subcommand("validate-log", "Check event logs for schema and consistency errors");
    std::vector<std::string> validate_paths;
    validate->add_option("logs", validate_paths, "Event logs")->required();

    auto* check = app.add_subcommand("validate-config", "Check a config file and print every violated constraint");
    std::string check_path;
    std::vector<std::string> check_sets;
    check->add_option("config", check_path, "Config file")->required();
    check->add_option("--set", check_sets, "Override a config key (repeatable)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Compute metric tables (CSV) and a summary from event logs");
    std::vector<std::string> analyze_paths;
    std::string analyze_out = "analysis", mode = "out", unit = "units", phases;
    bool exclude_expired = false, no_validate = false;
    int window = 1;
    analyze->add_option("logs", analyze_paths, "Event logs")->required();
    analyze->add_option("-o,--out", analyze_out, "Output directory")->capture_default_str();
    analyze->add_option("--mode", mode, "Exchange value: out or out+in")->check(CLI::IsMember({"out", "out+in"}));
    analyze->add_option("--unit", unit, "Exchange value unit: units or points")->check(CLI::IsMember({"units", "points"}));
    analyze->add_option("--phases", phases, "Phase ranges, e.g. 1-2,3-8,9-10");
    analyze->add_option("--window", window, "Rounds between a breach and the compared delivery")->capture_default_str();
    analyze->add_flag("--exclude-expired", exclude_expired, "Leave expired proposals out of acceptance rates");
    analyze->add_flag("--no-validate", no_validate, "Skip the replay check before analysis");

    // serve
    auto* serve = app.add_subcommand("serve", "Serve the human-session HTTP API");
    std::string host = "127.0.0.1", serve_config, journal_dir;
    int port = 8080;
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();
    serve->add_option("-c,--config", serve_config, "Config file whose [llm] section drives llm co-players");
    serve->add_option("--journal", journal_dir, "Write each session's event log here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto overrides = sets;
            if (seed) overrides.push_back("society.rng_seed=" + std::to_string(*seed));
            if (repetitions) overrides.push_back("society.repetitions=" + std::to_string(*repetitions));
            if (!cassette.empty()) overrides.push_back("llm.cassette_mode=" + cassette);
            if (!cassette_dir.empty()) overrides.push_back("llm.cassette_dir=" + cassette_dir);
            if (!roster.empty()) {
                const auto entries = split(roster, ',');
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    overrides.push_back("agents." + std::to_string(i) + ".controller=" + entries[i]);
                }
            }
            const auto loaded = load(config_path, overrides);
            if (const auto rep = validate_config(loaded.config); !rep.ok()) {
                for (const auto& v : rep.violations) std::cerr << "config: " << v << "\n";
                return 2;
            }
            // The snapshot keeps the file bytes; the manifest lists the overrides on top.
            const auto manifest =
                run_experiment(loaded.config, RunOptions{out_dir, loaded.source_text, run_id, parallel, overrides});
            for (const auto& r : manifest.repetitions) {
                std::cout << "repetition " << r.repetition_index << ": " << to_string(r.status) << "  " << r.log_path;
                for (std::size_t i = 0; i < r.final_values.size(); ++i) {
                    std::cout << "  " << loaded.config.agents[i].display_name << "=" << r.final_values[i];
                }
                if (!r.error.empty()) std::cout << "  (" << r.error << ")";
                std::cout << "\n";
            }
            if (manifest.usage.requests > 0) {
                std::cout << "llm: " << manifest.usage.requests << " requests, " << manifest.usage.input_tokens << " in / "
                          << manifest.usage.output_tokens << " out tokens, ~$" << manifest.usage.estimated_cost_usd << "\n";
            }
            std::cout << "manifest: " << manifest.manifest_path << "\n";
            return manifest.status == RunStatus::Completed ? 0 : 1;
        }
        if (*replay) {
            const auto r = replay_log(replay_path);
            std::cout << "run " << r.run_id << " repetition " << r.repetition_index << ": " << to_string(r.status) << ", "
                      << r.rounds << " rounds\n";
            for (const auto& a : r.config.agents) {
                std::cout << "  " << a.display_name << " " << format_resources(r.final_holdings[a.agent_id.index()], r.config)
                          << " = " << r.final_values[a.agent_id.index()] << " points\n";
            }
            return 0;
        }
        if (*validate) {
            int bad = 0;
            for (const auto& path : validate_paths) {
                try {
                    replay_log(path);
                    std::cout << path << ": ok\n";
                } catch (const Error& e) {
                    std::cout << path << ": " << to_string(e.code()) << ": " << e.what() << "\n";
                    ++bad;
                }
            }
            return bad == 0 ? 0 : 1;
        }
        if (*check) {
            const auto cfg = load_config_file(check_path, check_sets).config;
            const auto rep = validate_config(cfg);
            for (const auto& v : rep.violations) std::cout << v << "\n";
            if (rep.ok()) std::cout << "ok\n";
            return rep.ok() ? 0 : 2;
        }
        if (*analyze) {
            std::vector<LogView> logs;
            for (const auto& path : analyze_paths) logs.push_back(load_log_view(path, !no_validate));
            AnalysisOptions options;
            options.exchange.mode = mode == "out" ? ExchangeMode::DeliveredOut : ExchangeMode::DeliveredPlusReceived;
            options.exchange.unit = unit == "units" ? ValueUnit::Units : ValueUnit::Points;
            options.acceptance.include_expired = !exclude_expired;
            options.breach.window = window;
            if (!phases.empty()) options.segmentation = parse_phases(phases);
            std::cout << write_analysis(logs, analyze_out, options);
            return 0;
        }
        if (*serve) {
            SessionServiceOptions options;
            if (!serve_config.empty()) options.llm = load_config_file(serve_config).config.llm;
            options.journal_dir = journal_dir;
            SessionManager manager(options);
            httplib::Server server;
            mount_session_api(server, manager);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on http://" << host << ":" << port << "\n" << std::flush;
            if (!server.listen(host, port)) {
                std::cerr << "cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const Error& e) {
        return report(e);
    }
    return 0;
}
