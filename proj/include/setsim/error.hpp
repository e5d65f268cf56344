#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace setsim {

// Machine-readable failure codes. The string form (to_string) is what the
// HTTP API and the CLI report, so names are stable.
enum class ErrorCode {
    // core-domain
    NegativeQuantity,
    UnknownResourceType,
    UnknownAgent,
    ConfigError,
    // scoring
    CoefficientOrderViolation,
    // negotiation
    EmptyTurnOrder,
    InvalidRound,
    NotYourTurn,
    PhaseClosed,
    PhaseStillOpen,
    UnknownProposal,
    NotAddressee,
    ProposalNotPending,
    InvalidProposal,
    // exchange
    MissingDecision,
    OverCommit,
    InvalidDecision,
    // policies
    PolicyTimeout,
    MalformedDecision,
    MissingTemplateField,
    PolicyFailure,
    // llm-client
    AuthError,
    RateLimited,
    Timeout,
    TransportError,
    CassetteMiss,
    // orchestrator
    SchemaMismatch,
    CorruptLog,
    // analysis
    InsufficientData,
    // session-service
    InvalidPreset,
    UnknownSession,
    WrongPhase,
    InvalidScore,
    SessionNotFinished,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace setsim
