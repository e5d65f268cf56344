#include "setsim/llm_client.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "setsim/error.hpp"

namespace setsim {
namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* const hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

// Keys must never surface in errors, even if a server echoes them back.
std::string scrub(std::string text, const std::string& secret) {
    if (secret.empty()) return text;
    for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos)) {
        text.replace(pos, secret.size(), "[redacted]");
    }
    return text;
}

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorCode::ConfigError, "endpoint must be an http(s) URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

Json canonical_request(const LlmSettings& s, const std::string& system, const std::vector<ChatMessage>& messages) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"text", m.text}});
    // Plain json sorts keys, which keeps the hash independent of insertion order.
    nlohmann::json j = {{"provider", s.provider}, {"model", s.model_name}, {"temperature", s.temperature},
                        {"max_tokens", s.max_tokens}, {"top_p", s.top_p}, {"system", system}, {"messages", msgs}};
    return Json::parse(j.dump());
}

}  // namespace

void UsageLedger::record(const ChatResponse& response) {
    requests_.fetch_add(1, std::memory_order_relaxed);
    if (response.from_cassette) cassette_hits_.fetch_add(1, std::memory_order_relaxed);
    input_tokens_.fetch_add(response.input_tokens, std::memory_order_relaxed);
    output_tokens_.fetch_add(response.output_tokens, std::memory_order_relaxed);
}

UsageTotals UsageLedger::totals(double input_cost_per_mtok, double output_cost_per_mtok) const {
    UsageTotals t;
    t.requests = requests_.load();
    t.network_calls = network_calls_.load();
    t.cassette_hits = cassette_hits_.load();
    t.input_tokens = input_tokens_.load();
    t.output_tokens = output_tokens_.load();
    t.estimated_cost_usd = (static_cast<double>(t.input_tokens) * input_cost_per_mtok +
                            static_cast<double>(t.output_tokens) * output_cost_per_mtok) / 1e6;
    return t;
}

Json build_request_body(const LlmSettings& s, const std::string& system, const std::vector<ChatMessage>& messages) {
    Json body;
    body["model"] = s.model_name;
    body["max_tokens"] = s.max_tokens;
    body["temperature"] = s.temperature;
    body["top_p"] = s.top_p;
    Json msgs = Json::array();
    if (s.provider == "openai") {
        if (!system.empty()) msgs.push_back({{"role", "system"}, {"content", system}});
        for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.text}});
    } else if (s.provider == "anthropic") {
        body["system"] = system;
        for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.text}});
    } else {
        fail(ErrorCode::ConfigError, "unknown provider '" + s.provider + "'");
    }
    body["messages"] = std::move(msgs);
    return body;
}

ChatResponse parse_response_body(const std::string& provider, const std::string& body) {
    ChatResponse r;
    try {
        const auto j = Json::parse(body);
        if (provider == "openai") {
            r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                r.input_tokens = j["usage"].value("prompt_tokens", 0ULL);
                r.output_tokens = j["usage"].value("completion_tokens", 0ULL);
            }
        } else {
            for (const auto& block : j.at("content")) {
                if (block.value("type", "") == "text") r.text += block.at("text").get<std::string>();
            }
            if (j.contains("usage")) {
                r.input_tokens = j["usage"].value("input_tokens", 0ULL);
                r.output_tokens = j["usage"].value("output_tokens", 0ULL);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::TransportError, std::string("unexpected response body: ") + e.what());
    }
    return r;
}

std::string cassette_key(const LlmSettings& settings, const std::string& system, const std::vector<ChatMessage>& messages) {
    return sha256_hex(canonical_request(settings, system, messages).dump());
}

LlmClient::LlmClient(LlmSettings settings)
    : settings_(std::move(settings)),
      in_flight_(std::make_unique<std::counting_semaphore<1024>>(std::clamp(settings_.max_in_flight, 1, 1024))) {
    if (const auto problem = check_llm_settings(settings_); !problem.empty()) fail(ErrorCode::ConfigError, problem);
}

UsageTotals LlmClient::usage() const {
    return ledger_.totals(settings_.input_cost_per_mtok, settings_.output_cost_per_mtok);
}

ChatResponse LlmClient::complete(const std::string& system, const std::vector<ChatMessage>& messages) {
    namespace fs = std::filesystem;
    const bool uses_cassette = settings_.cassette_mode != CassetteMode::Off;
    fs::path file;
    if (uses_cassette) {
        if (settings_.cassette_dir.empty()) fail(ErrorCode::ConfigError, "cassette mode needs cassette_dir");
        file = fs::path(settings_.cassette_dir) / (cassette_key(settings_, system, messages) + ".json");
    }

    if (settings_.cassette_mode == CassetteMode::Replay) {
        std::ifstream in(file);
        if (!in) fail(ErrorCode::CassetteMiss, "no recording " + file.filename().string());
        Json rec;
        try {
            rec = Json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::CassetteMiss, "unreadable recording " + file.filename().string() + ": " + e.what());
        }
        ChatResponse r;
        r.text = rec.at("response").at("text").get<std::string>();
        r.input_tokens = rec["response"].value("input_tokens", 0ULL);
        r.output_tokens = rec["response"].value("output_tokens", 0ULL);
        r.from_cassette = true;
        ledger_.record(r);
        return r;
    }

    auto r = call_live(system, messages);
    ledger_.record(r);

    if (settings_.cassette_mode == CassetteMode::Record) {
        fs::create_directories(settings_.cassette_dir);
        Json rec;
        rec["request"] = canonical_request(settings_, system, messages);
        rec["response"] = {{"text", r.text}, {"input_tokens", r.input_tokens}, {"output_tokens", r.output_tokens}};
        // Write then rename so concurrent readers never see half a file.
        const auto tmp = file.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
        {
            std::ofstream out(tmp, std::ios::trunc);
            out << rec.dump(2) << '\n';
        }
        fs::rename(tmp, file);
    }
    return r;
}

ChatResponse LlmClient::call_live(const std::string& system, const std::vector<ChatMessage>& messages) {
    const char* key_env = std::getenv(settings_.api_key_env_var.c_str());
    if (!key_env || !*key_env) {
        fail(ErrorCode::AuthError, "API key environment variable " + settings_.api_key_env_var + " is not set");
    }
    const std::string key = key_env;
    const auto endpoint = split_url(settings_.endpoint_url);
    const auto body = build_request_body(settings_, system, messages).dump();

    httplib::Headers headers;
    if (settings_.provider == "openai") {
        headers.emplace("Authorization", "Bearer " + key);
    } else {
        headers.emplace("x-api-key", key);
        headers.emplace("anthropic-version", "2023-06-01");
    }

    const auto timeout = std::chrono::milliseconds(static_cast<long long>(settings_.request_timeout_s * 1000));
    ErrorCode last_code = ErrorCode::TransportError;
    std::string last_message;
    for (int attempt = 0; attempt <= settings_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(settings_.backoff_base_ms) << (attempt - 1)));
        }
        httplib::Result res;
        {
            in_flight_->acquire();
            struct Release {
                std::counting_semaphore<1024>& s;
                ~Release() { s.release(); }
            } release{*in_flight_};
            httplib::Client cli(endpoint.origin);
            cli.set_connection_timeout(timeout);
            cli.set_read_timeout(timeout);
            cli.set_write_timeout(timeout);
            ledger_.count_network_call();
            res = cli.Post(endpoint.path, headers, body, "application/json");
        }

        if (!res) {
            const auto err = res.error();
            last_code = err == httplib::Error::Read || err == httplib::Error::Write ? ErrorCode::Timeout
                                                                                    : ErrorCode::TransportError;
            last_message = "request failed: " + httplib::to_string(err);
            continue;
        }
        const int status = res->status;
        if (status == 200) return parse_response_body(settings_.provider, res->body);
        if (status == 401 || status == 403) {
            fail(ErrorCode::AuthError, "provider rejected credentials (HTTP " + std::to_string(status) + ")");
        }
        const std::string snippet = scrub(res->body.substr(0, 200), key);
        if (status == 429) {
            last_code = ErrorCode::RateLimited;
            last_message = "rate limited (HTTP 429): " + snippet;
            continue;
        }
        if (status >= 500) {
            last_code = ErrorCode::TransportError;
            last_message = "server error (HTTP " + std::to_string(status) + "): " + snippet;
            continue;
        }
        fail(ErrorCode::TransportError, "HTTP " + std::to_string(status) + ": " + snippet);
    }
    fail(last_code, scrub(last_message, key) + " after " + std::to_string(settings_.max_retries + 1) + " attempts");
}

}  // namespace setsim
