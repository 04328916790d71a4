#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "risklab/parser.hpp"
#include "risklab/prompt.hpp"

#include "testutil.hpp"

using namespace risklab;

namespace {

PredictionRecord parse(const std::string& text, PromptMode mode = PromptMode::FewShot,
                       FallbackPolicy fallback = FallbackPolicy::Error) {
    return parse_completion("SUBJ", text, mode, fallback);
}

}  // namespace

TEST_CASE("rendered demo replies parse back cleanly for both labels and modes") {
    const auto corpus = testutil::tiny_corpus();
    const auto target = *corpus.find("D1");
    for (PromptMode mode : {PromptMode::FewShot, PromptMode::FewShotCoT}) {
        for (Label label : {Label::AtRisk, Label::NoRisk}) {
            Demo demo;
            demo.subject = *corpus.find(label == Label::AtRisk ? "A1" : "N1");
            demo.answer_text = label_token(label);
            demo.rationale_text = "Because of the stated reasons.";
            const auto bundle = render_prompt(target, {demo}, mode);
            const auto& reply = bundle.messages[2].content;
            const auto parsed = parse(reply, mode);
            CHECK(parsed.predicted == label);
            CHECK(parsed.parse_status == ParseStatus::Clean);
        }
    }
}

TEST_CASE("marker answers parse cleanly in common shapes") {
    struct Case {
        const char* text;
        Label expect;
    };
    const Case cases[] = {
        {"[[ ## answer ## ]]\nyes", Label::AtRisk},
        {"[[ ## answer ## ]]\nno", Label::NoRisk},
        {"[[ ## answer ## ]] yes", Label::AtRisk},
        {"[[ ## answer ## ]]\n  YES  ", Label::AtRisk},
        {"[[ ## answer ## ]]\nNo\n", Label::NoRisk},
        {"[[ ## answer ## ]]\nyes\nI hope that helps.", Label::AtRisk},
        {"[[ ## answer ## ]]\nat risk", Label::AtRisk},
        {"[[ ## answer ## ]]\nnot at risk", Label::NoRisk},
        {"[[ ## answer ## ]]\nat_risk", Label::AtRisk},
        {"[[ ## answer ## ]]\nno_risk", Label::NoRisk},
        {"preamble text\n[[ ## answer ## ]]\nno", Label::NoRisk},
        {"[[ ## answer ## ]]\n\xe6\x98\xaf", Label::AtRisk},        // 是
        {"[[ ## answer ## ]]\n\xe6\xb2\xa1\xe6\x9c\x89", Label::NoRisk},  // 没有
    };
    for (const auto& c : cases) {
        const auto parsed = parse(c.text);
        CHECK_MESSAGE(parsed.predicted == c.expect, c.text);
        CHECK(parsed.parse_status == ParseStatus::Clean);
        CHECK(parsed.raw_completion == c.text);
    }
}

TEST_CASE("free-text completions salvage on exactly one match") {
    struct Case {
        const char* text;
        Label expect;
    };
    const Case cases[] = {
        {"I think the answer is yes.", Label::AtRisk},
        {"The patient is at risk.", Label::AtRisk},
        {"Definitely not at risk here.", Label::NoRisk},
        {"answer: no.", Label::NoRisk},
        {"y", Label::AtRisk},
        {"n.", Label::NoRisk},
        {"\xe6\x88\x91\xe8\xa7\x89\xe5\xbe\x97\xe6\xb2\xa1\xe6\x9c\x89", Label::NoRisk},  // 我觉得没有
        {"\xe6\x9c\x89", Label::AtRisk},                                                  // 有
        {"Risk assessment: at_risk", Label::AtRisk},
    };
    for (const auto& c : cases) {
        const auto parsed = parse(c.text);
        CHECK_MESSAGE(parsed.predicted == c.expect, c.text);
        CHECK(parsed.parse_status == ParseStatus::Salvaged);
    }
}

TEST_CASE("word boundaries block embedded tokens") {
    // "yes" inside "yesterday", "no" inside "nothing": no match survives,
    // so the fallback applies.
    for (const char* text : {"yesterday", "nothing", "canyon", "anybody", "notably"}) {
        const auto parsed = parse(text, PromptMode::FewShot, FallbackPolicy::NoRisk);
        CHECK_MESSAGE(parsed.parse_status == ParseStatus::FallbackApplied, text);
    }
    // Longest-first matching keeps "not at risk" from reading as "at risk".
    const auto negated = parse("not at risk");
    CHECK(negated.predicted == Label::NoRisk);
}

TEST_CASE("ambiguous completions fall back") {
    for (const char* text : {"yes or no", "no... yes", "at risk? not at risk",
                             "\xe6\x98\xaf\xe5\x90\xa6"}) {  // 是否
        const auto at = parse(text, PromptMode::FewShot, FallbackPolicy::AtRisk);
        CHECK_MESSAGE(at.parse_status == ParseStatus::FallbackApplied, text);
        CHECK(at.predicted == Label::AtRisk);
        const auto no = parse(text, PromptMode::FewShot, FallbackPolicy::NoRisk);
        CHECK(no.predicted == Label::NoRisk);
    }
}

TEST_CASE("marker present but garbled still salvages from the full text") {
    const auto parsed = parse("[[ ## answer ## ]]\nmaybe, but leaning yes");
    CHECK(parsed.predicted == Label::AtRisk);
    CHECK(parsed.parse_status == ParseStatus::Salvaged);
}

TEST_CASE("twenty adversarial completions honor the fallback policy") {
    const std::vector<std::string> adversarial = {
        "",
        "   ",
        "\n\n\n",
        "maybe",
        "unsure about this one",
        "yes no",
        "no or yes",
        "[[ ## answer ## ]]",
        "[[ ## answer ## ]]\n",
        "[[ ## answer ## ]]\nmaybe",
        "[[ ## answer ## ]]\nyes and no",
        "[[ ## reasoning ## ]]\nendless reasoning, never an answer marker",
        "the patient",
        "answer:",
        "42",
        "!!!???",
        "\xe6\x98\xaf\xe5\x90\xa6",                      // 是否
        "yesterday and tomorrow",
        std::string(5000, 'x'),
        "risk risk risk",
    };
    REQUIRE(adversarial.size() == 20);
    for (const auto& text : adversarial) {
        const auto at = parse_completion("S", text, PromptMode::FewShot, FallbackPolicy::AtRisk);
        CHECK_MESSAGE(at.parse_status == ParseStatus::FallbackApplied, "[" << text.substr(0, 40) << "]");
        CHECK(at.predicted == Label::AtRisk);

        const auto no = parse_completion("S", text, PromptMode::FewShot, FallbackPolicy::NoRisk);
        CHECK(no.parse_status == ParseStatus::FallbackApplied);
        CHECK(no.predicted == Label::NoRisk);

        CHECK_THROWS_AS(
            parse_completion("S", text, PromptMode::FewShot, FallbackPolicy::Error),
            Unparseable);
    }
}

TEST_CASE("unparseable errors carry subject and excerpt") {
    try {
        parse_completion("S42", std::string(300, 'z'), PromptMode::FewShot,
                         FallbackPolicy::Error);
        FAIL("expected Unparseable");
    } catch (const Unparseable& e) {
        CHECK(e.subject_id == "S42");
        CHECK(e.excerpt.size() < 300);  // excerpted, not the whole completion
        CHECK(std::string(e.what()).find("S42") != std::string::npos);
    }
}

TEST_CASE("chain-of-thought rationale extraction") {
    const std::string text =
        "[[ ## reasoning ## ]]\nThe transcript shows withdrawal.\n\n"
        "[[ ## answer ## ]]\nyes";
    const auto cot = parse(text, PromptMode::FewShotCoT);
    CHECK(cot.predicted == Label::AtRisk);
    CHECK(cot.parse_status == ParseStatus::Clean);
    REQUIRE(cot.rationale.has_value());
    CHECK(*cot.rationale == "The transcript shows withdrawal.");

    // The same text in plain few-shot mode keeps no rationale.
    const auto plain = parse(text, PromptMode::FewShot);
    CHECK(plain.predicted == Label::AtRisk);
    CHECK(!plain.rationale.has_value());

    // Empty reasoning bodies stay unset.
    const auto empty = parse("[[ ## reasoning ## ]]\n\n\n[[ ## answer ## ]]\nno",
                             PromptMode::FewShotCoT);
    CHECK(empty.predicted == Label::NoRisk);
    CHECK(!empty.rationale.has_value());
}

TEST_CASE("parser is total when fallback allows") {
    // Byte soup, control characters, broken UTF-8: never crash, always a
    // record when the policy is not Error.
    Rng rng(2024);
    for (int i = 0; i < 200; ++i) {
        std::string text(rng.below(64), '\0');
        for (auto& c : text) c = static_cast<char>(rng.below(256));
        const auto parsed =
            parse_completion("F", text, PromptMode::FewShotCoT, FallbackPolicy::AtRisk);
        CHECK((parsed.parse_status == ParseStatus::Clean ||
               parsed.parse_status == ParseStatus::Salvaged ||
               parsed.parse_status == ParseStatus::FallbackApplied));
    }
}

TEST_CASE("status and policy tokens") {
    CHECK(to_token(ParseStatus::Clean) == "clean");
    CHECK(to_token(ParseStatus::Salvaged) == "salvaged");
    CHECK(to_token(ParseStatus::FallbackApplied) == "fallback");
    CHECK(to_token(FallbackPolicy::AtRisk) == "at_risk");
    CHECK(to_token(FallbackPolicy::NoRisk) == "no_risk");
    CHECK(to_token(FallbackPolicy::Error) == "error");
    CHECK(fallback_policy_from_token("at_risk") == FallbackPolicy::AtRisk);
    CHECK(fallback_policy_from_token("error") == FallbackPolicy::Error);
    CHECK_THROWS_AS(fallback_policy_from_token("abstain"), Error);
}
