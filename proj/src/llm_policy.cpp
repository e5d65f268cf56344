#include "setsim/llm_policy.hpp"

#include <algorithm>
#include <cctype>

#include "setsim/error.hpp"
#include "setsim/json_codec.hpp"

namespace setsim {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

[[noreturn]] void malformed(const std::string& detail) { fail(ErrorCode::MalformedDecision, detail); }

struct Extracted {
    std::string prose;
    std::string block;
    bool found{false};
};

Extracted extract_block(const std::string& raw) {
    static const std::string fence = "```decision";
    Extracted out;
    const auto open = raw.rfind(fence);
    if (open == std::string::npos) {
        out.prose = trim(raw);
        return out;
    }
    const auto body = open + fence.size();
    const auto close = raw.find("```", body);
    if (close == std::string::npos) malformed("the ```decision block is not closed with ```");
    out.prose = trim(raw.substr(0, open));
    out.block = raw.substr(body, close - body);
    out.found = true;
    return out;
}

std::optional<bool> yes_no(std::string text) {
    text = lower(trim(text));
    while (!text.empty() && (text.back() == '.' || text.back() == '!' || text.back() == '"')) text.pop_back();
    while (!text.empty() && text.front() == '"') text.erase(text.begin());
    if (text == "yes" || text == "true") return true;
    if (text == "no" || text == "false") return false;
    return std::nullopt;
}

AgentId named_agent(const std::string& name, const ExperimentConfig& cfg) {
    try {
        return cfg.agent_by_name(name);
    } catch (const Error&) {
        malformed("unknown agent '" + name + "'");
    }
}

ResourceVector bundle(const Json& j, const ExperimentConfig& cfg, const std::string& where) {
    try {
        return resources_from_json(j, cfg);
    } catch (const Error& e) {
        malformed(where + ": " + e.what());
    }
}

PolicyDecision decode(DecisionKind kind, const Extracted& ex, const PolicyContext& ctx, ParseOptions options) {
    const auto& cfg = *ctx.config;
    if (kind == DecisionKind::ContinueOrPass && !ex.found) {
        if (const auto answer = yes_no(ex.prose)) return PolicyDecision{ContinueDecision{*answer}};
        malformed("expected yes or no, or a ```decision block with \"continue\"");
    }
    if (!ex.found) malformed("missing the ```decision block at the end of the response");

    Json j;
    try {
        j = Json::parse(ex.block);
    } catch (const nlohmann::json::exception& e) {
        malformed(std::string("decision block is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) malformed("decision block must be a JSON object");
    const auto rationale = j.contains("rationale") && j["rationale"].is_string() ? j["rationale"].get<std::string>() : ex.prose;

    switch (kind) {
        case DecisionKind::ContinueOrPass: {
            const auto it = j.find("continue");
            if (it == j.end()) malformed("missing \"continue\"");
            if (it->is_boolean()) return PolicyDecision{ContinueDecision{it->get<bool>()}};
            if (it->is_string()) {
                if (const auto answer = yes_no(it->get<std::string>())) return PolicyDecision{ContinueDecision{*answer}};
            }
            malformed("\"continue\" must be \"yes\" or \"no\"");
        }
        case DecisionKind::TurnReply: {
            const auto it = j.find("actions");
            if (it == j.end() || !it->is_array()) malformed("missing \"actions\" array");
            TurnReply reply;
            reply.utterance = ex.prose;
            for (const auto& a : *it) {
                try {
                    reply.actions.push_back(action_from_json(a, cfg));
                } catch (const Error& e) {
                    malformed(std::string("bad action: ") + e.what());
                } catch (const nlohmann::json::exception& e) {
                    malformed(std::string("bad action: ") + e.what());
                }
                auto& action = reply.actions.back();
                if (action.rationale.empty()) action.rationale = rationale;
                if (const auto* p = std::get_if<ProposeAction>(&action.kind)) {
                    if (!p->give.fits_within(ctx.holdings)) {
                        malformed("PROPOSE to " + cfg.agent(p->counterpart).display_name + " offers " +
                                  format_resources(p->give, cfg) + " but you hold " + format_resources(ctx.holdings, cfg));
                    }
                }
            }
            return PolicyDecision{std::move(reply)};
        }
        case DecisionKind::Allocation: {
            const auto it = j.find("allocations");
            if (it == j.end() || !it->is_object()) malformed("missing \"allocations\" object");
            AllocationDecision d{ctx.id(), {}, rationale, false};
            for (const auto& [name, units] : it->items()) {
                const auto to = named_agent(name, cfg);
                if (to == ctx.id()) malformed("cannot allocate resources to yourself");
                auto v = bundle(units, cfg, "allocation to " + name);
                if (!v.is_zero()) d.outgoing[to] = std::move(v);
            }
            if (!options.allow_overcommit) {
                const auto total = d.total(cfg.num_resource_types);
                if (!total.fits_within(ctx.holdings)) {
                    fail(ErrorCode::OverCommit, "allocations total " + format_resources(total, cfg) +
                                                    " but you hold " + format_resources(ctx.holdings, cfg));
                }
            }
            return PolicyDecision{std::move(d)};
        }
        case DecisionKind::BdiUpdate: {
            BdiState b;
            for (const auto* field : {"beliefs", "desires", "intentions"}) {
                const auto f = j.find(field);
                if (f == j.end()) malformed(std::string("missing \"") + field + "\"");
                // Models sometimes answer with lists or objects; keep them as JSON text.
                const auto text = f->is_string() ? f->get<std::string>() : f->dump();
                if (std::string_view(field) == "beliefs") b.beliefs = text;
                else if (std::string_view(field) == "desires") b.desires = text;
                else b.intentions = text;
            }
            b.updated_at_round = ctx.round;
            return PolicyDecision{std::move(b)};
        }
        case DecisionKind::AffinityUpdate: {
            const auto it = j.find("affinity");
            if (it == j.end() || !it->is_object()) malformed("missing \"affinity\" object");
            AffinityUpdate u;
            u.rationale = rationale;
            for (const auto& [name, score] : it->items()) {
                const auto target = named_agent(name, cfg);
                if (target == ctx.id()) malformed("cannot rate yourself");
                if (!score.is_number_integer()) malformed("affinity for " + name + " must be an integer");
                const auto s = score.get<long long>();
                if (s < kMinAffinity || s > kMaxAffinity) {
                    malformed("affinity for " + name + " is " + std::to_string(s) + ", outside 1 to 5");
                }
                u.scores[target] = static_cast<int>(s);
            }
            return PolicyDecision{std::move(u)};
        }
    }
    malformed("unknown decision kind");
}

}  // namespace

PolicyDecision parse_llm_decision(DecisionKind kind, const std::string& raw, const PolicyContext& ctx, ParseOptions options) {
    auto decision = decode(kind, extract_block(raw), ctx, options);
    if (kind == DecisionKind::TurnReply || kind == DecisionKind::AffinityUpdate) {
        try {
            validate_decision(kind, decision, ctx);
        } catch (const Error& e) {
            malformed(e.what());
        }
    }
    return decision;
}

LlmPolicy::LlmPolicy(std::shared_ptr<LlmClient> client, std::shared_ptr<const PromptLibrary> prompts, int max_attempts)
    : client_(std::move(client)), prompts_(std::move(prompts)), max_attempts_(std::max(1, max_attempts)) {}

PolicyDecision LlmPolicy::decide(DecisionKind kind, const PolicyContext& ctx) {
    const auto prompt = render_prompt(kind, ctx, *prompts_);
    std::vector<ChatMessage> messages{{"user", prompt.user}};
    bool overcommit_seen = false;
    for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
        const auto response = client_->complete(prompt.system, messages);
        try {
            auto d = parse_llm_decision(kind, response.text, ctx);
            d.attempts = attempt;
            return d;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::OverCommit && kind == DecisionKind::Allocation) {
                if (overcommit_seen) {
                    auto d = parse_llm_decision(kind, response.text, ctx, ParseOptions{true});
                    auto& alloc = std::get<AllocationDecision>(d.value);
                    alloc = clamp_allocation(std::move(alloc), ctx.holdings);
                    d.attempts = attempt;
                    return d;
                }
                overcommit_seen = true;
            } else if (e.code() != ErrorCode::MalformedDecision) {
                throw;
            }
            messages.push_back({"assistant", response.text});
            messages.push_back({"user", std::string("Your previous response could not be used: ") + e.what() +
                                            "\nAnswer again and end with exactly one ```decision block in the "
                                            "required format."});
        }
    }
    auto d = fallback_decision(kind, ctx);
    d.attempts = max_attempts_;
    return d;
}

}  // namespace setsim
