#pragma once

#include <string>

namespace setsim {

enum class CassetteMode { Off, Record, Replay };

std::string to_string(CassetteMode mode);
CassetteMode parse_cassette_mode(std::string_view text);

// Sampling defaults follow the reference experiment setup: temperature 0.5,
// max tokens 8192, top-p 0.9.
struct LlmSettings {
    std::string provider{"anthropic"};  // "anthropic" | "openai"
    std::string model_name{"claude-3-5-sonnet-20240620"};
    double temperature{0.5};
    int max_tokens{8192};
    double top_p{0.9};
    std::string endpoint_url{"https://api.anthropic.com/v1/messages"};
    std::string api_key_env_var{"ANTHROPIC_API_KEY"};
    double request_timeout_s{120.0};
    int max_retries{3};
    int backoff_base_ms{500};
    int max_in_flight{3};
    CassetteMode cassette_mode{CassetteMode::Off};
    std::string cassette_dir;
    std::string prompts_dir;  // empty: built-in default
    double input_cost_per_mtok{3.0};
    double output_cost_per_mtok{15.0};

    bool operator==(const LlmSettings&) const = default;
};

// Empty string when valid, else the first violated constraint.
std::string check_llm_settings(const LlmSettings& settings);

}  // namespace setsim
