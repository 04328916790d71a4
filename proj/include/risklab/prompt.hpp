#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "risklab/common.hpp"
#include "risklab/corpus.hpp"

namespace risklab {

enum class PromptMode { ZeroShot, FewShot, FewShotCoT };

std::string to_token(PromptMode mode);  // "zero_shot" / "few_shot" / "few_shot_cot"
PromptMode prompt_mode_from_token(const std::string& token);

enum class Role { System, User, Assistant };

std::string to_token(Role role);  // "system" / "user" / "assistant"

struct Message {
    Role role;
    std::string content;
};

/// One labeled training example serialized into the prompt as a
/// user/assistant exchange.
struct Demo {
    SubjectRecord subject;               // always from the Train split
    std::string answer_text;             // "yes" / "no"
    std::optional<std::string> rationale_text;  // used by CoT rendering only
};

struct PromptBundle {
    std::vector<Message> messages;
    std::vector<std::string> demo_ids;
    PromptMode mode = PromptMode::ZeroShot;
    int k = 0;
    std::uint64_t seed = 0;
};

struct InsufficientTrainExamples : Error {
    using Error::Error;
};

struct TargetInDemos : Error {
    explicit TargetInDemos(const std::string& subject_id);
};

/// Fixed user-message template; `{first speech transcript}` and
/// `{second speech transcript}` are replaced with the subject's task
/// transcripts.
extern const char kUserTemplate[];
extern const char kSystemBase[];
extern const char kSystemCoTSuffix[];

std::string label_token(Label label);  // AtRisk -> "yes", NoRisk -> "no"

std::string render_user_message(const SubjectRecord& subject);

/// Draws k Train-split demos without replacement, deterministically in
/// (corpus, k, seed, balanced). Balanced sampling takes ceil(k/2) at-risk
/// and floor(k/2) no-risk subjects and interleaves them starting with
/// at-risk.
std::vector<Demo> sample_demos(const Corpus& corpus, int k, std::uint64_t seed,
                               bool balanced);

/// Renders system + demo turns + target user message. Message count is
/// always 2 + 2k. The seed is carried as metadata only; content depends
/// solely on (subject, demos, mode).
PromptBundle render_prompt(const SubjectRecord& subject,
                           const std::vector<Demo>& demos, PromptMode mode,
                           std::uint64_t seed = 0);

}  // namespace risklab
