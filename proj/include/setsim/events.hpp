#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "setsim/json_codec.hpp"

namespace setsim {

inline constexpr int kSchemaVersion = 1;

enum class EventKind {
    RunStart,
    RoundStart,
    Injection,
    Turn,
    ProposalStatus,
    NegotiationClosed,
    AllocationSubmitted,
    ExchangeResolved,
    BdiUpdate,
    AffinityUpdate,
    RoundEnd,
    RunEnd,
};

std::string to_string(EventKind kind);
EventKind parse_event_kind(std::string_view text);  // SchemaMismatch

// One line of the NDJSON log. Field order on disk: schema_version, run_id,
// repetition_index, round, seq, kind, payload. No wall-clock fields, so
// scripted runs are byte-identical across machines.
struct EventRecord {
    int schema_version{kSchemaVersion};
    std::string run_id;
    int repetition_index{0};
    int round{0};
    std::uint64_t seq{0};
    EventKind kind{EventKind::RunStart};
    Json payload;

    bool operator==(const EventRecord&) const = default;
};

Json to_json(const EventRecord& e);
// Throws SchemaMismatch for missing fields or an unknown kind.
EventRecord event_from_json(const Json& j);
std::string to_line(const EventRecord& e);  // compact JSON, no newline

// Appends records to a file, flushing after each line so a crashed run
// leaves a readable prefix.
class EventLogWriter {
public:
    explicit EventLogWriter(const std::string& path);
    void write(const EventRecord& e);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

struct LoadedLog {
    std::vector<EventRecord> events;
    std::uint64_t last_valid_seq{0};
    std::string error;  // empty when every line parsed
};

// Reads lines until the first unparsable one; never throws for bad content.
LoadedLog read_event_log(const std::string& path);
LoadedLog parse_event_log(const std::string& text);

}  // namespace setsim
