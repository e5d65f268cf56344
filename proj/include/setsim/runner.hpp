#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "setsim/engine.hpp"
#include "setsim/llm_client.hpp"

namespace setsim {

struct Roster {
    std::vector<std::shared_ptr<Policy>> policies;
    std::shared_ptr<LlmClient> client;  // null when no seat uses a model
};

// Builds policies from each agent's controller. llm seats share one client
// and prompt library. Human seats get a HumanBridgePolicy when allowed and
// throw ConfigError otherwise: batch runs have nobody to ask.
Roster make_roster(const ExperimentConfig& cfg, bool allow_human = false);

using RosterFactory = std::function<Roster(int repetition_index)>;

struct RunOptions {
    std::string out_dir;           // empty: keep everything in memory
    std::string config_text;       // written verbatim as config.ini when set
    std::string run_id;            // empty: "seed-<rng_seed>"
    bool parallel_repetitions{false};
    std::vector<std::string> overrides;  // section.key=value applied on top of config_text
};

struct RepetitionResult {
    int repetition_index{0};
    std::string log_path;
    RunStatus status{RunStatus::Running};
    std::string error;
    Holdings final_holdings;
    std::vector<Points> final_values;
    UsageTotals usage;
    std::vector<EventRecord> events;
};

struct RunManifest {
    std::string run_id;
    ExperimentConfig config;
    std::string config_text;
    std::vector<std::string> overrides;
    std::vector<std::string> roster;  // policy name per agent
    std::string started_at;
    std::string finished_at;
    RunStatus status{RunStatus::Running};
    UsageTotals usage;
    std::vector<RepetitionResult> repetitions;
    std::string manifest_path;

    Json to_json() const;
};

// Runs cfg.repetitions independent games. Each repetition gets fresh
// holdings, affinity 3 everywhere and its own log rep-<k>.ndjson. A policy
// failure ends that repetition with a failed run_end; later repetitions are
// skipped and the manifest status is failed.
RunManifest run_experiment(const ExperimentConfig& cfg, const RosterFactory& factory, const RunOptions& options = {});
RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

struct ReplayResult {
    ExperimentConfig config;
    std::string run_id;
    int repetition_index{0};
    RunStatus status{RunStatus::Running};
    int rounds{0};
    std::vector<Holdings> holdings_by_round;       // [0] initial, [r] after round r
    std::vector<AffinityLedger> affinity_by_round; // same indexing
    std::vector<RoundOutcome> outcomes;
    Holdings final_holdings;
    std::vector<Points> final_values;
};

// Re-derives every holdings, proposal and affinity transition from the
// events and checks each logged snapshot. Errors: CorruptLog (unparsable or
// truncated log, snapshot mismatch; the message names the last valid seq),
// SchemaMismatch (wrong schema_version, seq not increasing, round going
// backwards, unknown kind, missing fields).
ReplayResult replay_events(const std::vector<EventRecord>& events);
ReplayResult replay_log(const std::string& path);

}  // namespace setsim
