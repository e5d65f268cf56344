#include "setsim/events.hpp"

#include <array>
#include <sstream>

#include "setsim/error.hpp"

namespace setsim {
namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 12> kKindNames{{
    {EventKind::RunStart, "run_start"},
    {EventKind::RoundStart, "round_start"},
    {EventKind::Injection, "injection"},
    {EventKind::Turn, "turn"},
    {EventKind::ProposalStatus, "proposal_status"},
    {EventKind::NegotiationClosed, "negotiation_closed"},
    {EventKind::AllocationSubmitted, "allocation_submitted"},
    {EventKind::ExchangeResolved, "exchange_resolved"},
    {EventKind::BdiUpdate, "bdi_update"},
    {EventKind::AffinityUpdate, "affinity_update"},
    {EventKind::RoundEnd, "round_end"},
    {EventKind::RunEnd, "run_end"},
}};

}  // namespace

std::string to_string(EventKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return std::string(name);
    }
    return "";
}

EventKind parse_event_kind(std::string_view text) {
    for (const auto& [k, name] : kKindNames) {
        if (name == text) return k;
    }
    fail(ErrorCode::SchemaMismatch, "unknown event kind '" + std::string(text) + "'");
}

Json to_json(const EventRecord& e) {
    Json j;
    j["schema_version"] = e.schema_version;
    j["run_id"] = e.run_id;
    j["repetition_index"] = e.repetition_index;
    j["round"] = e.round;
    j["seq"] = e.seq;
    j["kind"] = to_string(e.kind);
    j["payload"] = e.payload;
    return j;
}

EventRecord event_from_json(const Json& j) {
    if (!j.is_object()) fail(ErrorCode::SchemaMismatch, "event must be an object");
    EventRecord e;
    try {
        e.schema_version = j.at("schema_version").get<int>();
        e.run_id = j.at("run_id").get<std::string>();
        e.repetition_index = j.at("repetition_index").get<int>();
        e.round = j.at("round").get<int>();
        e.seq = j.at("seq").get<std::uint64_t>();
        e.kind = parse_event_kind(j.at("kind").get<std::string>());
        e.payload = j.at("payload");
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::SchemaMismatch, std::string("malformed event: ") + ex.what());
    }
    return e;
}

std::string to_line(const EventRecord& e) { return to_json(e).dump(); }

EventLogWriter::EventLogWriter(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) fail(ErrorCode::ConfigError, "cannot open event log " + path + " for writing");
}

void EventLogWriter::write(const EventRecord& e) {
    out_ << to_line(e) << '\n';
    out_.flush();
}

LoadedLog parse_event_log(const std::string& text) {
    LoadedLog log;
    std::istringstream in(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty()) continue;
        try {
            log.events.push_back(event_from_json(Json::parse(line)));
            log.last_valid_seq = log.events.back().seq;
        } catch (const std::exception& ex) {
            log.error = "line " + std::to_string(line_no) + ": " + ex.what();
            break;
        }
    }
    return log;
}

LoadedLog read_event_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        LoadedLog log;
        log.error = "cannot open " + path;
        return log;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_event_log(buf.str());
}

}  // namespace setsim
