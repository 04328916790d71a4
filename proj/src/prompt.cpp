#include "risklab/prompt.hpp"

#include <algorithm>

namespace risklab {

std::string to_token(PromptMode mode) {
    switch (mode) {
        case PromptMode::ZeroShot: return "zero_shot";
        case PromptMode::FewShot: return "few_shot";
        case PromptMode::FewShotCoT: return "few_shot_cot";
    }
    throw Error("invalid prompt mode");
}

PromptMode prompt_mode_from_token(const std::string& token) {
    if (token == "zero_shot") return PromptMode::ZeroShot;
    if (token == "few_shot") return PromptMode::FewShot;
    if (token == "few_shot_cot") return PromptMode::FewShotCoT;
    throw Error("unknown prompt mode '" + token + "'");
}

std::string to_token(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    throw Error("invalid role");
}

TargetInDemos::TargetInDemos(const std::string& subject_id)
    : Error("target subject '" + subject_id + "' appears among the demos") {}

const char kUserTemplate[] =
    "[[ ## context ## ]]\n"
    "A Chinese teenager was given 2 tasks.\n"
    "1. They had to answer to the\n"
    "following question\n"
    "'Have you ever experienced moments of\n"
    "extreme emotional distress?\n"
    "How do you manage such feelings?'\n"
    "Their answer: {first speech transcript}\n"
    "2. They were shown an image of a face\n"
    "displaying negative emotions, and asked\n"
    "to describe it.\n"
    "Their answer: {second speech transcript}\n"
    "\n"
    "[[ ## question ## ]]\n"
    "Is this patient at risk of suicide?";

const char kSystemBase[] =
    "You screen speech-transcript summaries for suicide risk.\n"
    "Each user message contains a `[[ ## context ## ]]` section describing a "
    "patient and a `[[ ## question ## ]]` section.\n"
    "Answer with the marker `[[ ## answer ## ]]` on its own line, then a "
    "single word: `yes` if the patient is at risk, `no` otherwise.";

const char kSystemCoTSuffix[] =
    "\nBefore the answer, emit `[[ ## reasoning ## ]]` on its own line "
    "followed by concise step-by-step reasoning.";

std::string label_token(Label label) {
    return label == Label::AtRisk ? "yes" : "no";
}

namespace {

void substitute(std::string& text, const std::string& placeholder,
                const std::string& value) {
    const auto pos = text.find(placeholder);
    if (pos == std::string::npos)
        throw Error("template placeholder missing: " + placeholder);
    text.replace(pos, placeholder.size(), value);
}

Demo make_demo(const SubjectRecord& subject) {
    Demo demo;
    demo.subject = subject;
    demo.answer_text = label_token(subject.label);
    if (!subject.rationale.empty()) demo.rationale_text = subject.rationale;
    return demo;
}

}  // namespace

std::string render_user_message(const SubjectRecord& subject) {
    std::string body = kUserTemplate;
    substitute(body, "{first speech transcript}", subject.transcript_task1);
    substitute(body, "{second speech transcript}", subject.transcript_task2);
    return body;
}

std::vector<Demo> sample_demos(const Corpus& corpus, int k, std::uint64_t seed,
                               bool balanced) {
    if (k < 0) throw Error("demo count must be non-negative");
    if (k == 0) return {};

    Rng rng(seed);
    std::vector<Demo> demos;
    demos.reserve(static_cast<std::size_t>(k));

    if (balanced) {
        std::vector<const SubjectRecord*> at_risk;
        std::vector<const SubjectRecord*> no_risk;
        for (const auto& record : corpus.subjects()) {
            if (record.split != Split::Train) continue;
            (record.label == Label::AtRisk ? at_risk : no_risk).push_back(&record);
        }
        const std::size_t need_at_risk = (static_cast<std::size_t>(k) + 1) / 2;
        const std::size_t need_no_risk = static_cast<std::size_t>(k) / 2;
        if (at_risk.size() < need_at_risk || no_risk.size() < need_no_risk)
            throw InsufficientTrainExamples(
                "balanced sampling needs " + std::to_string(need_at_risk) +
                " at-risk and " + std::to_string(need_no_risk) +
                " no-risk training subjects, have " +
                std::to_string(at_risk.size()) + "/" +
                std::to_string(no_risk.size()));
        rng.shuffle(at_risk);
        rng.shuffle(no_risk);
        for (std::size_t i = 0; i < need_at_risk || i < need_no_risk; ++i) {
            if (i < need_at_risk) demos.push_back(make_demo(*at_risk[i]));
            if (i < need_no_risk) demos.push_back(make_demo(*no_risk[i]));
        }
    } else {
        std::vector<const SubjectRecord*> pool;
        for (const auto& record : corpus.subjects())
            if (record.split == Split::Train) pool.push_back(&record);
        if (pool.size() < static_cast<std::size_t>(k))
            throw InsufficientTrainExamples(
                "need " + std::to_string(k) + " training subjects, have " +
                std::to_string(pool.size()));
        rng.shuffle(pool);
        for (int i = 0; i < k; ++i)
            demos.push_back(make_demo(*pool[static_cast<std::size_t>(i)]));
    }
    return demos;
}

PromptBundle render_prompt(const SubjectRecord& subject,
                           const std::vector<Demo>& demos, PromptMode mode,
                           std::uint64_t seed) {
    if (mode == PromptMode::ZeroShot && !demos.empty())
        throw Error("zero-shot prompt cannot carry demos");
    if (mode != PromptMode::ZeroShot && demos.empty())
        throw Error("few-shot prompt needs at least one demo; use zero-shot");
    for (const auto& demo : demos)
        if (demo.subject.subject_id == subject.subject_id)
            throw TargetInDemos(subject.subject_id);

    PromptBundle bundle;
    bundle.mode = mode;
    bundle.k = static_cast<int>(demos.size());
    bundle.seed = seed;

    std::string system = kSystemBase;
    if (mode == PromptMode::FewShotCoT) system += kSystemCoTSuffix;
    bundle.messages.push_back({Role::System, std::move(system)});

    for (const auto& demo : demos) {
        bundle.demo_ids.push_back(demo.subject.subject_id);
        bundle.messages.push_back({Role::User, render_user_message(demo.subject)});
        std::string reply;
        if (mode == PromptMode::FewShotCoT) {
            reply = "[[ ## reasoning ## ]]\n" +
                    demo.rationale_text.value_or("") + "\n\n[[ ## answer ## ]]\n" +
                    demo.answer_text;
        } else {
            reply = "[[ ## answer ## ]]\n" + demo.answer_text;
        }
        bundle.messages.push_back({Role::Assistant, std::move(reply)});
    }
    bundle.messages.push_back({Role::User, render_user_message(subject)});
    return bundle;
}

}  // namespace risklab
