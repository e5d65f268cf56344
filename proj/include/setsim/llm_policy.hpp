#pragma once

#include <memory>
#include <string>

#include "setsim/llm_client.hpp"
#include "setsim/policy.hpp"
#include "setsim/prompts.hpp"

namespace setsim {

struct ParseOptions {
    // Accept allocations exceeding holdings; the caller clamps them.
    bool allow_overcommit{false};
};

// Extracts the last ```decision fenced block from raw model output and
// decodes it for the given kind (see docs/schema.md). Prose before the block
// becomes the utterance or rationale. A bare yes/no is accepted for
// continue decisions. Throws MalformedDecision, or OverCommit for an
// allocation exceeding holdings.
PolicyDecision parse_llm_decision(DecisionKind kind, const std::string& raw, const PolicyContext& ctx,
                                  ParseOptions options = {});

// Renders the prompt for each decision, calls the model, and retries with the
// validation error echoed back. After max_attempts the always-legal fallback
// is used. A persisting over-commit is clamped after one re-prompt.
// Transport errors (AuthError, RateLimited, Timeout, TransportError,
// CassetteMiss) propagate.
class LlmPolicy final : public Policy {
public:
    LlmPolicy(std::shared_ptr<LlmClient> client, std::shared_ptr<const PromptLibrary> prompts, int max_attempts = 3);

    std::string name() const override { return "llm"; }
    bool prefers_concurrency() const override { return true; }
    bool interactive() const override { return true; }
    PolicyDecision decide(DecisionKind kind, const PolicyContext& ctx) override;

private:
    std::shared_ptr<LlmClient> client_;
    std::shared_ptr<const PromptLibrary> prompts_;
    int max_attempts_;
};

}  // namespace setsim
