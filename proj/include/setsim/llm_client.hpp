#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "setsim/json_codec.hpp"
#include "setsim/llm_settings.hpp"

namespace setsim {

struct ChatMessage {
    std::string role;  // "user" | "assistant"
    std::string text;
    bool operator==(const ChatMessage&) const = default;
};

struct ChatResponse {
    std::string text;
    std::uint64_t input_tokens{0};
    std::uint64_t output_tokens{0};
    bool from_cassette{false};
};

struct UsageTotals {
    std::uint64_t requests{0};
    std::uint64_t network_calls{0};  // HTTP attempts, retries included
    std::uint64_t cassette_hits{0};
    std::uint64_t input_tokens{0};
    std::uint64_t output_tokens{0};
    double estimated_cost_usd{0.0};
};

// Monotone counters, safe to bump from several threads.
class UsageLedger {
public:
    void record(const ChatResponse& response);
    void count_network_call() { network_calls_.fetch_add(1, std::memory_order_relaxed); }
    UsageTotals totals(double input_cost_per_mtok, double output_cost_per_mtok) const;

private:
    std::atomic<std::uint64_t> requests_{0};
    std::atomic<std::uint64_t> network_calls_{0};
    std::atomic<std::uint64_t> cassette_hits_{0};
    std::atomic<std::uint64_t> input_tokens_{0};
    std::atomic<std::uint64_t> output_tokens_{0};
};

// Provider adapters. "anthropic": messages API with x-api-key;
// "openai": chat-completions API with a bearer token.
Json build_request_body(const LlmSettings& settings, const std::string& system, const std::vector<ChatMessage>& messages);
ChatResponse parse_response_body(const std::string& provider, const std::string& body);

// Hex SHA-256 of the canonical request description (provider, model,
// sampling settings, system text, messages).
std::string cassette_key(const LlmSettings& settings, const std::string& system, const std::vector<ChatMessage>& messages);

// Shareable across threads; at most max_in_flight requests are on the wire.
class LlmClient {
public:
    explicit LlmClient(LlmSettings settings);

    // Errors: AuthError (missing key, 401/403), RateLimited (429 after
    // retries), Timeout, TransportError, CassetteMiss.
    ChatResponse complete(const std::string& system, const std::vector<ChatMessage>& messages);

    const LlmSettings& settings() const noexcept { return settings_; }
    UsageTotals usage() const;

private:
    ChatResponse call_live(const std::string& system, const std::vector<ChatMessage>& messages);

    LlmSettings settings_;
    std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
    UsageLedger ledger_;
};

}  // namespace setsim
