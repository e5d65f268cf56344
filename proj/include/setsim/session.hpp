#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "setsim/engine.hpp"
#include "setsim/runner.hpp"

namespace setsim {

enum class SessionPhase { AwaitingTurn, AwaitingAllocation, AwaitingAffinity, BetweenRounds, Finished };

std::string to_string(SessionPhase phase);

// Presets:
//   human-study      SpecializedOnly start, T = 10, the human plays Carol
//                    against two co-players (default scripted:honest-reciprocator)
//   trust-violation  as above with T = 20 and co-players
//                    scripted:trust-violator@K (K = 10)
// Options (all optional): rounds, violation_round, co_players (a controller
// string), controllers (one per agent, overrides co_players and the human
// seat), human (seat name), seed, injection_per_round, initial_holdings
// {name: {label: n}}, turn_timeout_s.
struct SessionRequest {
    std::string preset{"human-study"};
    Json options = Json::object();
};

// Throws InvalidPreset for unknown presets, bad options, invalid configs
// and anything other than exactly one human seat.
ExperimentConfig session_config(const SessionRequest& request);

struct SessionServiceOptions {
    LlmSettings llm;          // used for llm co-players
    std::string journal_dir;  // empty: no journal files
    std::function<std::chrono::steady_clock::time_point()> clock{std::chrono::steady_clock::now};
};

class Session;

// All state-changing calls are serialized per session. Views are immutable
// snapshots published after every engine event, so reads never wait for
// co-player calls to finish.
class SessionManager {
public:
    explicit SessionManager(SessionServiceOptions options = {});
    ~SessionManager();

    // {"session_id", "state"}
    Json create(const SessionRequest& request);
    Json state(const std::string& id);
    Json submit_turn(const std::string& id, const Json& body);
    Json submit_allocation(const std::string& id, const Json& body);
    Json submit_affinity(const std::string& id, const Json& body);
    Json result(const std::string& id);  // SessionNotFinished

    std::vector<EventRecord> events(const std::string& id);

private:
    std::shared_ptr<Session> find(const std::string& id);

    SessionServiceOptions options_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t counter_{0};
};

}  // namespace setsim
