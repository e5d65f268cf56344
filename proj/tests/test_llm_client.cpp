#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mock_llm.hpp"
#include "setsim/engine.hpp"
#include "setsim/error.hpp"
#include "setsim/llm_client.hpp"
#include "setsim/llm_policy.hpp"
#include "setsim/scripted.hpp"

using namespace setsim;
namespace fs = std::filesystem;

namespace {

constexpr const char* kKeyVar = "SETSIM_TEST_API_KEY";
constexpr const char* kSecret = "sk-test-0123456789abcdef";

LlmSettings mock_settings(const std::string& url) {
    LlmSettings s;
    s.endpoint_url = url;
    s.api_key_env_var = kKeyVar;
    s.backoff_base_ms = 1;
    s.request_timeout_s = 5;
    return s;
}

struct KeyGuard {
    KeyGuard() { setenv(kKeyVar, kSecret, 1); }
    ~KeyGuard() { unsetenv(kKeyVar); }
};

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("setsim-llm-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Scripted status codes in order, then 200 with a fixed reply.
class FlakyServer {
public:
    explicit FlakyServer(std::vector<int> statuses, std::string error_body = "{}") : statuses_(std::move(statuses)) {
        server_.Post("/v1/messages", [this, error_body](const httplib::Request&, httplib::Response& res) {
            const auto n = static_cast<std::size_t>(hits_++);
            if (n < statuses_.size()) {
                res.status = statuses_[n];
                res.set_content(error_body, "application/json");
                return;
            }
            res.set_content(R"({"content":[{"type":"text","text":"ok"}],"usage":{"input_tokens":3,"output_tokens":1}})",
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FlakyServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/messages"; }
    int hits() const { return hits_; }

private:
    std::vector<int> statuses_;
    httplib::Server server_;
    int port_{0};
    std::thread thread_;
    std::atomic<int> hits_{0};
};

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::ConfigError;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("request bodies follow each provider's format") {
    LlmSettings s;
    const std::vector<ChatMessage> msgs{{"user", "hello"}};
    const auto a = build_request_body(s, "be brief", msgs);
    CHECK(a["system"] == "be brief");
    CHECK(a["messages"].size() == 1);
    CHECK(a["messages"][0]["content"] == "hello");
    CHECK(a["temperature"] == 0.5);
    CHECK(a["top_p"] == 0.9);
    CHECK(a["max_tokens"] == 8192);

    s.provider = "openai";
    const auto o = build_request_body(s, "be brief", msgs);
    CHECK_FALSE(o.contains("system"));
    CHECK(o["messages"][0]["role"] == "system");
    CHECK(o["messages"][1]["content"] == "hello");
}

TEST_CASE("response bodies decode text and usage") {
    const auto a = parse_response_body(
        "anthropic", R"({"content":[{"type":"text","text":"hi "},{"type":"text","text":"there"}],"usage":{"input_tokens":7,"output_tokens":2}})");
    CHECK(a.text == "hi there");
    CHECK(a.input_tokens == 7);
    CHECK(a.output_tokens == 2);
    const auto o = parse_response_body(
        "openai", R"({"choices":[{"message":{"role":"assistant","content":"yo"}}],"usage":{"prompt_tokens":4,"completion_tokens":1}})");
    CHECK(o.text == "yo");
    CHECK(o.input_tokens == 4);
    CHECK(code_of([] { parse_response_body("anthropic", "not json"); }) == ErrorCode::TransportError);
}

TEST_CASE("cassette keys cover every sampling input") {
    LlmSettings s;
    const std::vector<ChatMessage> msgs{{"user", "hello"}};
    const auto base = cassette_key(s, "sys", msgs);
    CHECK(base.size() == 64);
    CHECK(base == cassette_key(s, "sys", msgs));
    CHECK(base != cassette_key(s, "other", msgs));
    CHECK(base != cassette_key(s, "sys", {{"user", "hello!"}}));
    auto t = s;
    t.temperature = 0.4;
    CHECK(base != cassette_key(t, "sys", msgs));
    auto m = s;
    m.model_name = "another-model";
    CHECK(base != cassette_key(m, "sys", msgs));
    // Credentials and endpoints are not part of the request identity.
    auto k = s;
    k.endpoint_url = "http://localhost:1/v1/messages";
    k.api_key_env_var = "OTHER";
    CHECK(base == cassette_key(k, "sys", msgs));
}

TEST_CASE("missing API key fails before any network call") {
    unsetenv(kKeyVar);
    mock::ChatServer server;
    LlmClient client(mock_settings(server.url()));
    CHECK(code_of([&] { client.complete("sys", {{"user", "hi"}}); }) == ErrorCode::AuthError);
    CHECK(server.stats().requests == 0);
    CHECK(client.usage().network_calls == 0);
}

TEST_CASE("live calls send the key header and tally usage") {
    KeyGuard key;
    mock::ChatServer server(0.0, [](const std::string&, const mock::Json&) { return std::string("pong"); });
    LlmClient client(mock_settings(server.url()));
    const auto r = client.complete("sys", {{"user", "ping"}});
    CHECK(r.text == "pong");
    CHECK_FALSE(r.from_cassette);
    const auto headers = server.last_headers();
    CHECK(headers.find("x-api-key")->second == kSecret);
    CHECK(headers.find("anthropic-version")->second == "2023-06-01");
    const auto u = client.usage();
    CHECK(u.requests == 1);
    CHECK(u.network_calls == 1);
    CHECK(u.input_tokens > 0);
    CHECK(u.estimated_cost_usd > 0.0);
}

TEST_CASE("rate limits and server errors are retried with backoff") {
    KeyGuard key;
    FlakyServer server({429, 503});
    LlmClient client(mock_settings(server.url()));
    CHECK(client.complete("sys", {{"user", "hi"}}).text == "ok");
    CHECK(server.hits() == 3);
    CHECK(client.usage().network_calls == 3);
    CHECK(client.usage().requests == 1);
}

TEST_CASE("retries give up with the last error") {
    KeyGuard key;
    FlakyServer server({429, 429, 429, 429, 429});
    auto s = mock_settings(server.url());
    s.max_retries = 2;
    LlmClient client(s);
    CHECK(code_of([&] { client.complete("sys", {{"user", "hi"}}); }) == ErrorCode::RateLimited);
    CHECK(server.hits() == 3);
}

TEST_CASE("rejected credentials are not retried and never leak the key") {
    KeyGuard key;
    FlakyServer unauthorized({401, 401});
    LlmClient a(mock_settings(unauthorized.url()));
    const auto msg = message_of([&] { a.complete("sys", {{"user", "hi"}}); });
    CHECK(code_of([&] { a.complete("sys", {{"user", "hi"}}); }) == ErrorCode::AuthError);
    CHECK(unauthorized.hits() == 2);
    CHECK(msg.find(kSecret) == std::string::npos);

    // A server that echoes the key back in an error body.
    FlakyServer echo({400}, std::string(R"({"error":"bad key )") + kSecret + "\"}");
    LlmClient b(mock_settings(echo.url()));
    const auto echoed = message_of([&] { b.complete("sys", {{"user", "hi"}}); });
    CHECK(!echoed.empty());
    CHECK(echoed.find(kSecret) == std::string::npos);
    CHECK(echoed.find("[redacted]") != std::string::npos);
}

TEST_CASE("unreachable endpoints surface as transport errors") {
    KeyGuard key;
    auto s = mock_settings("http://127.0.0.1:1/v1/messages");
    s.max_retries = 1;
    LlmClient client(s);
    const auto code = code_of([&] { client.complete("sys", {{"user", "hi"}}); });
    CHECK((code == ErrorCode::TransportError || code == ErrorCode::Timeout));
}

TEST_CASE("cassettes record once and replay offline") {
    const auto dir = fresh_dir("cassette");
    {
        KeyGuard key;
        mock::ChatServer server(0.0, [](const std::string&, const mock::Json& m) {
            return "echo " + m.at(0).at("content").get<std::string>();
        });
        auto s = mock_settings(server.url());
        s.cassette_mode = CassetteMode::Record;
        s.cassette_dir = dir.string();
        LlmClient client(s);
        CHECK(client.complete("sys", {{"user", "one"}}).text == "echo one");
        CHECK(client.complete("sys", {{"user", "two"}}).text == "echo two");
        CHECK(server.stats().requests == 2);
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        ++files;
        CHECK(entry.path().extension() == ".json");
        CHECK(slurp(entry.path()).find(kSecret) == std::string::npos);
    }
    CHECK(files == 2);

    // No key, no server: replay must not touch the network.
    unsetenv(kKeyVar);
    auto s = mock_settings("http://127.0.0.1:1/v1/messages");
    s.cassette_mode = CassetteMode::Replay;
    s.cassette_dir = dir.string();
    LlmClient replay(s);
    const auto r = replay.complete("sys", {{"user", "two"}});
    CHECK(r.text == "echo two");
    CHECK(r.from_cassette);
    CHECK(replay.usage().cassette_hits == 1);
    CHECK(replay.usage().network_calls == 0);
    CHECK(code_of([&] { replay.complete("sys", {{"user", "three"}}); }) == ErrorCode::CassetteMiss);
    fs::remove_all(dir);
}

TEST_CASE("settings are validated up front") {
    LlmSettings s;
    s.temperature = 3.0;
    CHECK(code_of([&] { LlmClient c(s); }) == ErrorCode::ConfigError);
    LlmSettings t;
    t.cassette_mode = CassetteMode::Replay;
    CHECK(code_of([&] { LlmClient c(t); }) == ErrorCode::ConfigError);
}

namespace {

struct PolicyFixture {
    std::shared_ptr<const ExperimentConfig> cfg;
    std::unique_ptr<GameEngine> engine;

    PolicyFixture() {
        auto c = ExperimentConfig::reference_default();
        for (auto& a : c.agents) a.controller = parse_controller("scripted:pass-bot");
        cfg = std::make_shared<const ExperimentConfig>(c);
        std::vector<std::shared_ptr<Policy>> roster;
        for (int i = 0; i < 3; ++i) roster.push_back(make_scripted_policy("pass-bot"));
        engine = std::make_unique<GameEngine>(cfg, roster);
        engine->run_to_completion();
    }
};

std::shared_ptr<const PromptLibrary> prompts() {
    return std::make_shared<const PromptLibrary>(PromptLibrary::load(""));
}

// Replies from a fixed list, one per request; the last one repeats.
mock::ChatServer::Responder sequence(std::vector<std::string> replies) {
    auto state = std::make_shared<std::pair<std::mutex, std::size_t>>();
    return [replies, state](const std::string&, const mock::Json&) {
        std::lock_guard lock(state->first);
        const auto i = std::min(state->second++, replies.size() - 1);
        return replies[i];
    };
}

}  // namespace

TEST_CASE("llm policy re-prompts with the error and then succeeds") {
    KeyGuard key;
    PolicyFixture f;
    mock::ChatServer server(0.0, sequence({"no block here", "fine\n```decision\n{\"affinity\": {\"Bob\": 5}}\n```"}));
    LlmPolicy policy(std::make_shared<LlmClient>(mock_settings(server.url())), prompts());
    const auto d = policy.decide(DecisionKind::AffinityUpdate, f.engine->context_for(AgentId{0}, DecisionKind::AffinityUpdate));
    CHECK(d.attempts == 2);
    CHECK_FALSE(d.fallback);
    CHECK(d.as<AffinityUpdate>().scores.at(AgentId{1}) == 5);
    CHECK(server.stats().retries_seen == 1);
}

TEST_CASE("llm policy falls back after repeated malformed output") {
    KeyGuard key;
    PolicyFixture f;
    mock::ChatServer server(0.0, sequence({"```decision\n{\"affinity\": {\"Bob\": 9}}\n```"}));
    LlmPolicy policy(std::make_shared<LlmClient>(mock_settings(server.url())), prompts(), 3);
    const auto ctx = f.engine->context_for(AgentId{0}, DecisionKind::AffinityUpdate);
    const auto d = policy.decide(DecisionKind::AffinityUpdate, ctx);
    CHECK(d.fallback);
    CHECK(d.attempts == 3);
    CHECK(d.as<AffinityUpdate>().scores.empty());
    CHECK(server.stats().requests == 3);
}

TEST_CASE("llm policy clamps a repeated over-commit") {
    KeyGuard key;
    PolicyFixture f;
    // 400 + 100 of type A is far beyond what Alice holds; the split stays 4:1.
    mock::ChatServer server(0.0, sequence({"```decision\n{\"allocations\": {\"Bob\": {\"A\": 400}, \"Carol\": {\"A\": 100}}}\n```"}));
    LlmPolicy policy(std::make_shared<LlmClient>(mock_settings(server.url())), prompts());
    const auto ctx = f.engine->context_for(AgentId{0}, DecisionKind::Allocation);
    const auto d = policy.decide(DecisionKind::Allocation, ctx);
    CHECK(d.attempts == 2);
    const auto& alloc = d.as<AllocationDecision>();
    CHECK(alloc.clamped);
    CHECK(alloc.total(3)[0] == ctx.holdings[0]);
    CHECK(alloc.outgoing.at(AgentId{1})[0] == ctx.holdings[0] * 4 / 5);
}

TEST_CASE("transport errors propagate out of the policy") {
    unsetenv(kKeyVar);
    PolicyFixture f;
    mock::ChatServer server;
    LlmPolicy policy(std::make_shared<LlmClient>(mock_settings(server.url())), prompts());
    CHECK(code_of([&] { policy.decide(DecisionKind::BdiUpdate, f.engine->context_for(AgentId{0}, DecisionKind::BdiUpdate)); }) ==
          ErrorCode::AuthError);
}
