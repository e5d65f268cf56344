#include "setsim/prompts.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "setsim/error.hpp"
#include "setsim/scoring.hpp"

#ifndef SETSIM_DEFAULT_PROMPTS_DIR
#define SETSIM_DEFAULT_PROMPTS_DIR "prompts"
#endif

namespace setsim {
namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ConfigError, "cannot read prompt template " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

const char* const kNumberWords[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};

std::string count_word(std::size_t k) { return k < std::size(kNumberWords) ? kNumberWords[k] : std::to_string(k); }

std::string scoring_rules(const ExperimentConfig& cfg) {
    std::string text;
    const auto& r = cfg.value_coefficients;
    for (std::size_t k = 1; k <= r.size(); ++k) {
        if (!text.empty()) text += " ";
        const std::string points = std::to_string(r[k - 1]) + (r[k - 1] == 1 ? " point." : " points.");
        if (k == 1) {
            text += "A single resource unit is worth " + points;
        } else {
            text += "A combination of " + count_word(k) + " different resources is worth " + points;
        }
    }
    text += " Combinations are formed greedily from the largest sets down; each unit counts once.";
    return text;
}

std::string describe_proposal(const Proposal& p, const ExperimentConfig& cfg) {
    return p.proposal_id + ": " + cfg.agent(p.proposer).display_name + " offers " + cfg.agent(p.counterpart).display_name +
           " " + format_resources(p.give, cfg) + " in exchange for " + format_resources(p.receive, cfg) + " [" +
           to_string(p.status) + "]";
}

std::string describe_breaches(const RoundOutcome& outcome, const ExperimentConfig& cfg) {
    if (outcome.breaches.empty()) return "No promises and no deliveries.";
    std::string text;
    for (const auto& b : outcome.breaches) {
        if (!text.empty()) text += "\n";
        text += "- " + cfg.agent(b.debtor).display_name + " promised " + cfg.agent(b.creditor).display_name + " " +
                format_resources(b.promised, cfg) + " and delivered " + format_resources(b.delivered, cfg);
        if (b.signed_breach > 0) text += " (under-delivered by " + std::to_string(b.signed_breach) + ")";
        else if (b.signed_breach < 0) text += " (over-delivered by " + std::to_string(-b.signed_breach) + ")";
        else text += " (kept)";
    }
    return text;
}

std::string describe_transcript(const std::vector<Utterance>& transcript, const ExperimentConfig& cfg) {
    if (transcript.empty()) return "(nothing said yet)";
    std::string text;
    for (const auto& u : transcript) {
        if (!text.empty()) text += "\n";
        text += "[discussion " + std::to_string(u.discussion_round) + "] " + cfg.agent(u.speaker).display_name + ": " +
                (u.actions.empty() && u.text.empty() ? "(pass)" : u.text);
    }
    return text;
}

std::string describe_history(const PolicyContext& ctx) {
    const auto& cfg = *ctx.config;
    std::string text;
    if (ctx.memory) {
        for (const auto& mem : *ctx.memory) {
            if (mem.round >= ctx.round) continue;
            if (!text.empty()) text += "\n";
            text += "Round " + std::to_string(mem.round) + ":\n";
            std::size_t accepted = 0;
            for (const auto& p : mem.proposals) {
                if (p.status != ProposalStatus::Accepted) continue;
                text += "  accepted " + describe_proposal(p, cfg) + "\n";
                ++accepted;
            }
            if (accepted == 0) text += "  no accepted deals\n";
            std::istringstream lines(describe_breaches(mem.outcome, cfg));
            for (std::string line; std::getline(lines, line);) text += "  " + line + "\n";
        }
    }
    if (text.empty()) text = "(no earlier rounds)";
    if (!ctx.own_notes.empty()) {
        text += "\nYour private notes from earlier decisions:";
        const auto first = ctx.own_notes.size() > 10 ? ctx.own_notes.size() - 10 : 0;
        for (auto i = first; i < ctx.own_notes.size(); ++i) text += "\n- " + ctx.own_notes[i];
    }
    return text;
}

std::string describe_promises(const PolicyContext& ctx) {
    const auto& cfg = *ctx.config;
    std::string text;
    for (const auto& [key, units] : ctx.promises_due) {
        if (units.is_zero()) continue;
        if (!text.empty()) text += "\n";
        if (key.first == ctx.id()) text += "- You promised " + cfg.agent(key.second).display_name + " " + format_resources(units, cfg);
        else if (key.second == ctx.id()) text += "- " + cfg.agent(key.first).display_name + " promised you " + format_resources(units, cfg);
    }
    return text.empty() ? "No accepted deals this round." : text;
}

}  // namespace

std::string template_file_name(DecisionKind kind) {
    switch (kind) {
        case DecisionKind::ContinueOrPass: return "continue.tmpl";
        case DecisionKind::TurnReply: return "reply.tmpl";
        case DecisionKind::Allocation: return "make_deal.tmpl";
        case DecisionKind::BdiUpdate: return "update_bdi.tmpl";
        case DecisionKind::AffinityUpdate: return "update_affinity.tmpl";
    }
    return "";
}

PromptLibrary PromptLibrary::load(const std::string& dir) {
    const std::filesystem::path base(dir.empty() ? default_dir() : dir);
    PromptLibrary lib;
    lib.system_ = read_file(base / "system.tmpl");
    for (auto kind : {DecisionKind::ContinueOrPass, DecisionKind::TurnReply, DecisionKind::Allocation,
                      DecisionKind::BdiUpdate, DecisionKind::AffinityUpdate}) {
        lib.templates_[kind] = read_file(base / template_file_name(kind));
    }
    return lib;
}

std::string PromptLibrary::default_dir() {
    if (const char* env = std::getenv("SETSIM_PROMPTS_DIR"); env && *env) return env;
    return SETSIM_DEFAULT_PROMPTS_DIR;
}

std::string render_template(std::string_view text, const std::map<std::string, std::string>& fields) {
    std::string out;
    out.reserve(text.size() * 2);
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, open - pos));
        const auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) fail(ErrorCode::MissingTemplateField, "unterminated placeholder");
        const auto name = trim(text.substr(open + 2, close - open - 2));
        pos = close + 2;
        if (name.starts_with("!")) {
            // Drop the whole line when the comment stands alone on it.
            const bool line_start = out.empty() || out.back() == '\n';
            if (line_start && pos < text.size() && text[pos] == '\n') ++pos;
            continue;
        }
        const auto it = fields.find(name);
        if (it == fields.end()) fail(ErrorCode::MissingTemplateField, "no value for placeholder '" + name + "'");
        out += it->second;
    }
    return out;
}

std::string persona_preamble(const AgentProfile& profile) {
    static const char* const rational[] = {
        "You rarely work through the numbers and seldom compute expected values.",
        "You do some calculation but often skip detailed analysis.",
        "You balance careful calculation with quick judgement.",
        "You usually analyze trades carefully and compare expected values.",
        "You rigorously compute expected values before every decision.",
    };
    static const char* const experiential[] = {
        "You put little weight on gut feeling or on what worked before.",
        "You occasionally follow your instincts but mostly set them aside.",
        "You give your intuition and past experience moderate weight.",
        "You often trust your instincts and the lessons of earlier rounds.",
        "You lean heavily on intuition and on what worked before.",
    };
    std::string text;
    if (profile.svo == SocialValueOrientation::Proself) {
        text = "Your social value orientation is proself. You care about maximizing your own outcome and treat "
               "others' gains as irrelevant unless they serve yours.";
    } else {
        text = "Your social value orientation is prosocial. You care about joint outcomes and value fairness and "
               "reciprocity with the other agents.";
    }
    const auto pick = [](const char* const* table, int score) { return table[std::clamp(score, 1, 5) - 1]; };
    text += " Rational thinking " + std::to_string(profile.rei_rational) + "/5: " + pick(rational, profile.rei_rational);
    text += " Experiential thinking " + std::to_string(profile.rei_experiential) + "/5: " +
            pick(experiential, profile.rei_experiential);
    return text;
}

std::pair<int, int> rei_preset(std::string_view name) {
    if (name == "all-rational") return {5, 1};
    if (name == "all-experiential") return {1, 5};
    fail(ErrorCode::ConfigError, "unknown REI preset '" + std::string(name) + "'");
}

std::string affinity_rubric() {
    return "1: Strong negative feelings due to unpleasant history. For example, past betrayal or intentional harm.\n"
           "2: Slight discomfort from previous interactions. For example, consistently aggressive exchange or lack of "
           "mutual benefit consideration.\n"
           "3: Neutral balanced feelings. For example, fair trades, keeping promises.\n"
           "4: Positive bonds built through good experiences. For example, frequently proposing mutually beneficial "
           "trades.\n"
           "5: Deep trust formed through consistent support. For example, willing to compromise to maintain "
           "relationship, or defending your interests in front of others.";
}

std::map<std::string, std::string> prompt_fields(const PolicyContext& ctx) {
    const auto& cfg = *ctx.config;
    std::map<std::string, std::string> f;
    f["agent_name"] = ctx.self.display_name;
    f["num_agents"] = std::to_string(cfg.agents.size());
    f["num_resource_types"] = std::to_string(cfg.num_resource_types);
    std::string labels;
    for (const auto& l : cfg.resource_labels) labels += (labels.empty() ? "" : ", ") + l;
    f["resource_labels"] = labels;
    f["specialization"] = cfg.label(ctx.self.specialization);
    f["injection"] = std::to_string(cfg.injection_per_round);
    f["scoring_rules"] = scoring_rules(cfg);
    f["max_discussion_rounds"] = std::to_string(cfg.max_discussion_rounds);
    f["total_rounds"] = std::to_string(ctx.total_rounds);
    f["round"] = std::to_string(ctx.round);
    f["discussion_round"] = std::to_string(ctx.negotiation.discussion_round);
    f["persona"] = persona_preamble(ctx.self);

    std::string others;
    for (const auto& a : cfg.agents) {
        if (a.agent_id == ctx.id()) continue;
        if (!others.empty()) others += "\n";
        others += "- " + a.display_name + ", specializes in " + cfg.label(a.specialization);
    }
    f["other_agents"] = others;

    f["holdings"] = format_resources(ctx.holdings, cfg);
    const auto value = holding_value(ctx.holdings, cfg.value_coefficients);
    f["holding_value"] = "worth " + std::to_string(value.total_points) + " points";

    std::string affinity;
    for (const auto& a : cfg.agents) {
        if (a.agent_id == ctx.id()) continue;
        const auto it = ctx.affinity_out.find(a.agent_id);
        affinity += (affinity.empty() ? "" : ", ") + a.display_name + " " +
                    std::to_string(it == ctx.affinity_out.end() ? kNeutralAffinity : it->second);
    }
    f["affinity"] = affinity;
    f["affinity_rubric"] = affinity_rubric();

    if (ctx.bdi.beliefs.empty() && ctx.bdi.desires.empty() && ctx.bdi.intentions.empty()) {
        f["bdi"] = "(not formed yet)";
    } else {
        f["bdi"] = "Beliefs: " + ctx.bdi.beliefs + "\nDesires: " + ctx.bdi.desires + "\nIntentions: " + ctx.bdi.intentions;
    }

    f["transcript"] = describe_transcript(ctx.negotiation.transcript, cfg);
    std::string proposals;
    for (const auto& p : ctx.negotiation.proposals) proposals += (proposals.empty() ? "" : "\n") + describe_proposal(p, cfg);
    f["proposals"] = proposals.empty() ? "(none)" : proposals;

    const auto* last = ctx.last_round();
    if (last && last->round == ctx.round) {
        f["promised_vs_executed"] = describe_breaches(last->outcome, cfg);
        // The live negotiation is gone by the update stage; show the round's.
        f["transcript"] = describe_transcript(last->transcript, cfg);
    } else {
        f["promised_vs_executed"] = "(not executed yet)";
    }
    f["promises_due"] = describe_promises(ctx);
    f["history"] = describe_history(ctx);
    return f;
}

RenderedPrompt render_prompt(DecisionKind kind, const PolicyContext& ctx, const PromptLibrary& library) {
    const auto fields = prompt_fields(ctx);
    // Named locals: GCC 11 leaks an already-built member when a later
    // initializer in a braced return throws.
    auto system = render_template(library.system_template(), fields);
    auto user = render_template(library.template_for(kind), fields);
    return {std::move(system), std::move(user)};
}

}  // namespace setsim
