#include <doctest.h>

#include <filesystem>

#include "setsim/engine.hpp"
#include "setsim/error.hpp"
#include "setsim/llm_policy.hpp"
#include "setsim/prompts.hpp"
#include "setsim/scripted.hpp"

using namespace setsim;

namespace {

constexpr DecisionKind kAllKinds[] = {DecisionKind::ContinueOrPass, DecisionKind::TurnReply, DecisionKind::Allocation,
                                      DecisionKind::BdiUpdate, DecisionKind::AffinityUpdate};

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::ConfigError;
}

// An engine paused in round 1 negotiation, with one pending proposal from
// Bob to Alice (R1-P1: Bob gives 2 B for 2 A).
struct Table {
    std::shared_ptr<const ExperimentConfig> cfg;
    std::unique_ptr<GameEngine> engine;

    Table() {
        auto c = ExperimentConfig::reference_default();
        c.agents[0].controller = parse_controller("human");
        c.agents[1].controller = parse_controller("human");
        c.agents[2].controller = parse_controller("scripted:pass-bot");
        cfg = std::make_shared<const ExperimentConfig>(c);
        engine = std::make_unique<GameEngine>(
            cfg, std::vector<std::shared_ptr<Policy>>{std::make_shared<HumanBridgePolicy>(), std::make_shared<HumanBridgePolicy>(),
                                                      make_scripted_policy("pass-bot")});
        REQUIRE(engine->advance() == PendingInput{AgentId{0}, DecisionKind::TurnReply});
        engine->submit(PolicyDecision{TurnReply{"", {}}});
        REQUIRE(engine->advance() == PendingInput{AgentId{1}, DecisionKind::TurnReply});
        engine->submit(PolicyDecision{TurnReply{"Alice, B for A?", {AgentAction{ProposeAction{AgentId{0}, {0, 2, 0}, {2, 0, 0}}, ""}}}});
        engine->advance();
    }

    PolicyContext alice(DecisionKind kind) const { return engine->context_for(AgentId{0}, kind); }
};

}  // namespace

TEST_CASE("render_template substitutes and rejects unknown fields") {
    CHECK(render_template("Hi {{name}}, round {{r}}.", {{"name", "Alice"}, {"r", "3"}}) == "Hi Alice, round 3.");
    CHECK(render_template("{{! a comment }}\nbody {{x}}", {{"x", "1"}}) == "body 1");
    CHECK(render_template("inline {{! note }}text", {}) == "inline text");
    CHECK(code_of([] { render_template("{{missing}}", {}); }) == ErrorCode::MissingTemplateField);
    CHECK(code_of([] { render_template("open {{name", {{"name", "x"}}); }) == ErrorCode::MissingTemplateField);
}

TEST_CASE("persona preamble reflects SVO and REI scores") {
    AgentProfile p;
    p.svo = SocialValueOrientation::Proself;
    std::tie(p.rei_rational, p.rei_experiential) = rei_preset("all-rational");
    CHECK(p.rei_rational == 5);
    CHECK(p.rei_experiential == 1);
    const auto proself = persona_preamble(p);
    CHECK(proself.find("Rational thinking 5/5") != std::string::npos);
    CHECK(proself.find("Experiential thinking 1/5") != std::string::npos);

    p.svo = SocialValueOrientation::Prosocial;
    std::tie(p.rei_rational, p.rei_experiential) = rei_preset("all-experiential");
    const auto prosocial = persona_preamble(p);
    CHECK(prosocial != proself);
    CHECK(prosocial.find("Experiential thinking 5/5") != std::string::npos);
    CHECK(code_of([] { rei_preset("balanced"); }) == ErrorCode::ConfigError);
}

TEST_CASE("shipped templates load and render every decision kind") {
    const auto lib = PromptLibrary::load("");
    Table t;
    for (const auto kind : kAllKinds) {
        CHECK(lib.template_for(kind).rfind("{{! template-version:", 0) == 0);
        const auto r = render_prompt(kind, t.alice(kind), lib);
        CHECK(r.system.find("You are Alice,") != std::string::npos);
        CHECK(r.system.find("{{") == std::string::npos);
        CHECK(r.user.find("{{") == std::string::npos);
        CHECK(r.user.find("template-version") == std::string::npos);
        CHECK(r.user.find("```decision") != std::string::npos);
    }
    const auto reply = render_prompt(DecisionKind::TurnReply, t.alice(DecisionKind::TurnReply), lib);
    CHECK(reply.user.find("R1-P1: Bob offers Alice") != std::string::npos);
    CHECK(reply.user.find("Alice, B for A?") != std::string::npos);
    const auto affinity = render_prompt(DecisionKind::AffinityUpdate, t.alice(DecisionKind::AffinityUpdate), lib);
    CHECK(affinity.user.find(affinity_rubric().substr(0, 40)) != std::string::npos);
}

TEST_CASE("a template directory missing a file is a config error") {
    const auto dir = std::filesystem::temp_directory_path() / "setsim-empty-prompts";
    std::filesystem::create_directories(dir);
    CHECK(code_of([&] { PromptLibrary::load(dir.string()); }) == ErrorCode::ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("custom templates with unknown placeholders fail at render time") {
    auto lib = PromptLibrary::load("");
    lib.set(DecisionKind::BdiUpdate, "{{no_such_field}}");
    Table t;
    CHECK(code_of([&] { render_prompt(DecisionKind::BdiUpdate, t.alice(DecisionKind::BdiUpdate), lib); }) ==
          ErrorCode::MissingTemplateField);
}

TEST_CASE("continue decisions accept several spellings") {
    Table t;
    const auto ctx = t.alice(DecisionKind::ContinueOrPass);
    auto proceed = [&](const std::string& raw) {
        return parse_llm_decision(DecisionKind::ContinueOrPass, raw, ctx).as<ContinueDecision>().proceed;
    };
    CHECK(proceed("Yes"));
    CHECK_FALSE(proceed("no."));
    CHECK(proceed("thinking...\n```decision\n{\"continue\": \"yes\"}\n```"));
    CHECK_FALSE(proceed("```decision\n{\"continue\": false}\n```"));
    CHECK(code_of([&] { proceed("maybe"); }) == ErrorCode::MalformedDecision);
    CHECK(code_of([&] { proceed("```decision\n{\"continue\": \"perhaps\"}\n```"); }) == ErrorCode::MalformedDecision);
}

TEST_CASE("reply decisions decode actions and keep the prose as utterance") {
    Table t;
    const auto ctx = t.alice(DecisionKind::TurnReply);
    const auto d = parse_llm_decision(
        DecisionKind::TurnReply,
        "Deal, Bob. Carol, want some A?\n```decision\n{\"actions\": [{\"type\": \"ACCEPT\", \"proposal_id\": \"R1-P1\"}, "
        "{\"type\": \"PROPOSE\", \"to\": \"Carol\", \"give\": {\"A\": 3}, \"receive\": {\"C\": 3}}]}\n```",
        ctx);
    const auto& reply = d.as<TurnReply>();
    CHECK(reply.utterance == "Deal, Bob. Carol, want some A?");
    REQUIRE(reply.actions.size() == 2);
    CHECK(std::get<AcceptAction>(reply.actions[0].kind).proposal_id == "R1-P1");
    const auto& p = std::get<ProposeAction>(reply.actions[1].kind);
    CHECK(p.counterpart == AgentId{2});
    CHECK(p.give == ResourceVector{3, 0, 0});
    CHECK(p.receive == ResourceVector{0, 0, 3});

    auto bad = [&](const std::string& block) {
        return code_of([&] { parse_llm_decision(DecisionKind::TurnReply, "```decision\n" + block + "\n```", ctx); });
    };
    CHECK(bad(R"({"actions": [{"type": "ACCEPT", "proposal_id": "R9-P9"}]})") == ErrorCode::MalformedDecision);
    CHECK(bad(R"({"actions": [{"type": "PROPOSE", "to": "Dave", "give": {"A": 1}, "receive": {}}]})") == ErrorCode::MalformedDecision);
    CHECK(bad(R"({"actions": [{"type": "PROPOSE", "to": "Bob", "give": {"Z": 1}, "receive": {}}]})") == ErrorCode::MalformedDecision);
    CHECK(bad(R"({"actions": [{"type": "PROPOSE", "to": "Bob", "give": {"A": 999}, "receive": {"B": 1}}]})") ==
          ErrorCode::MalformedDecision);
    CHECK(bad(R"({"actions": [{"type": "SHOUT"}]})") == ErrorCode::MalformedDecision);
    CHECK(bad(R"({"actions": "none"})") == ErrorCode::MalformedDecision);
    CHECK(bad("{not json") == ErrorCode::MalformedDecision);
    CHECK(code_of([&] { parse_llm_decision(DecisionKind::TurnReply, "I pass.", ctx); }) == ErrorCode::MalformedDecision);
}

TEST_CASE("the last decision block wins") {
    Table t;
    const auto ctx = t.alice(DecisionKind::AffinityUpdate);
    const auto d = parse_llm_decision(DecisionKind::AffinityUpdate,
                                      "draft\n```decision\n{\"affinity\": {\"Bob\": 1}}\n```\nfinal\n```decision\n{\"affinity\": "
                                      "{\"Bob\": 4}}\n```",
                                      ctx);
    CHECK(d.as<AffinityUpdate>().scores.at(AgentId{1}) == 4);
}

TEST_CASE("allocation, BDI and affinity decisions decode") {
    Table t;
    const auto alloc_ctx = t.alice(DecisionKind::Allocation);
    const auto a = parse_llm_decision(DecisionKind::Allocation,
                                      "Keeping my word.\n```decision\n{\"allocations\": {\"Bob\": {\"A\": 2}, \"Carol\": {}}}\n```",
                                      alloc_ctx)
                       .as<AllocationDecision>();
    CHECK(a.outgoing.size() == 1);
    CHECK(a.outgoing.at(AgentId{1}) == ResourceVector{2, 0, 0});
    CHECK(a.rationale == "Keeping my word.");
    CHECK(code_of([&] {
              parse_llm_decision(DecisionKind::Allocation, "```decision\n{\"allocations\": {\"Bob\": {\"A\": 9999}}}\n```", alloc_ctx);
          }) == ErrorCode::OverCommit);
    const auto lenient = parse_llm_decision(DecisionKind::Allocation, "```decision\n{\"allocations\": {\"Bob\": {\"A\": 9999}}}\n```",
                                            alloc_ctx, ParseOptions{true});
    CHECK(lenient.as<AllocationDecision>().outgoing.at(AgentId{1})[0] == 9999);
    CHECK(code_of([&] {
              parse_llm_decision(DecisionKind::Allocation, "```decision\n{\"allocations\": {\"Alice\": {\"A\": 1}}}\n```", alloc_ctx);
          }) == ErrorCode::MalformedDecision);

    const auto b = parse_llm_decision(DecisionKind::BdiUpdate,
                                      "```decision\n{\"beliefs\": \"b\", \"desires\": [\"more C\"], \"intentions\": \"i\"}\n```",
                                      t.alice(DecisionKind::BdiUpdate))
                       .as<BdiState>();
    CHECK(b.beliefs == "b");
    CHECK(b.desires == R"(["more C"])");
    CHECK(code_of([&] {
              parse_llm_decision(DecisionKind::BdiUpdate, "```decision\n{\"beliefs\": \"b\"}\n```", t.alice(DecisionKind::BdiUpdate));
          }) == ErrorCode::MalformedDecision);

    const auto aff_ctx = t.alice(DecisionKind::AffinityUpdate);
    auto affinity = [&](const std::string& block) {
        return code_of([&] { parse_llm_decision(DecisionKind::AffinityUpdate, "```decision\n" + block + "\n```", aff_ctx); });
    };
    CHECK(affinity(R"({"affinity": {"Bob": 6}})") == ErrorCode::MalformedDecision);
    CHECK(affinity(R"({"affinity": {"Bob": 0}})") == ErrorCode::MalformedDecision);
    CHECK(affinity(R"({"affinity": {"Bob": 2.5}})") == ErrorCode::MalformedDecision);
    CHECK(affinity(R"({"affinity": {"Alice": 5}})") == ErrorCode::MalformedDecision);
    CHECK(code_of([&] { parse_llm_decision(DecisionKind::AffinityUpdate, "```decision\n{\"affinity\": {}}", aff_ctx); }) ==
          ErrorCode::MalformedDecision);
}
