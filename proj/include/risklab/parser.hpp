#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "risklab/common.hpp"
#include "risklab/corpus.hpp"
#include "risklab/prompt.hpp"

namespace risklab {

enum class ParseStatus { Clean, Salvaged, FallbackApplied };

std::string to_token(ParseStatus status);  // "clean" / "salvaged" / "fallback"

enum class FallbackPolicy { AtRisk, NoRisk, Error };

std::string to_token(FallbackPolicy policy);
FallbackPolicy fallback_policy_from_token(const std::string& token);

struct ExchangeMeta {
    std::int64_t latency_ms = 0;
    int attempt_count = 1;
};

struct PredictionRecord {
    std::string subject_id;
    Label predicted = Label::NoRisk;
    std::optional<std::string> rationale;
    std::string raw_completion;
    ParseStatus parse_status = ParseStatus::Clean;
    ExchangeMeta exchange_meta;
};

struct Unparseable : Error {
    Unparseable(const std::string& subject_id, const std::string& excerpt);
    std::string subject_id;
    std::string excerpt;
};

/// Extracts a binary verdict from a raw completion.
///
/// 1. With an `[[ ## answer ## ]]` marker, the segment after it (whole
///    trimmed segment, then its first line) is normalized against the
///    multilingual yes/no table -> Clean.
/// 2. Otherwise the whole completion is scanned; exactly one normalized
///    match (longest-first, word-bounded for Latin entries) -> Salvaged.
/// 3. Otherwise the fallback label applies -> FallbackApplied, or
///    FallbackPolicy::Error raises Unparseable.
///
/// In CoT mode the text between `[[ ## reasoning ## ]]` and the answer
/// marker is kept as the rationale.
PredictionRecord parse_completion(const std::string& subject_id,
                                  const std::string& text, PromptMode mode,
                                  FallbackPolicy fallback);

}  // namespace risklab
