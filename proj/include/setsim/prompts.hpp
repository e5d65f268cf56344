#pragma once

#include <map>
#include <string>
#include <string_view>

#include "setsim/policy.hpp"

namespace setsim {

struct RenderedPrompt {
    std::string system;
    std::string user;
    bool operator==(const RenderedPrompt&) const = default;
};

// Template files, one per decision kind plus the shared system prompt:
// system.tmpl, continue.tmpl, reply.tmpl, make_deal.tmpl, update_bdi.tmpl,
// update_affinity.tmpl. Placeholders are {{name}}; {{! ...}} is a comment
// and a line holding only a comment is dropped.
class PromptLibrary {
public:
    // Throws ConfigError when a file is missing.
    static PromptLibrary load(const std::string& dir);
    // SETSIM_PROMPTS_DIR if set, else the prompts/ directory of the source tree.
    static std::string default_dir();

    void set(DecisionKind kind, std::string text) { templates_[kind] = std::move(text); }
    void set_system(std::string text) { system_ = std::move(text); }
    const std::string& system_template() const { return system_; }
    const std::string& template_for(DecisionKind kind) const { return templates_.at(kind); }

private:
    std::string system_;
    std::map<DecisionKind, std::string> templates_;
};

std::string template_file_name(DecisionKind kind);

// Substitutes {{name}} from fields. Unknown names and unterminated
// placeholders throw MissingTemplateField.
std::string render_template(std::string_view text, const std::map<std::string, std::string>& fields);

// Two sentences on social value orientation, two on the REI scores.
std::string persona_preamble(const AgentProfile& profile);

// Named REI presets: "all-rational" (5, 1) and "all-experiential" (1, 5).
// Throws ConfigError for other names.
std::pair<int, int> rei_preset(std::string_view name);

std::string affinity_rubric();

// Every placeholder value available to the templates.
std::map<std::string, std::string> prompt_fields(const PolicyContext& ctx);

RenderedPrompt render_prompt(DecisionKind kind, const PolicyContext& ctx, const PromptLibrary& library);

}  // namespace setsim
