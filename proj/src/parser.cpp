#include "risklab/parser.hpp"

#include <algorithm>
#include <array>
#include <vector>

namespace risklab {

std::string to_token(ParseStatus status) {
    switch (status) {
        case ParseStatus::Clean: return "clean";
        case ParseStatus::Salvaged: return "salvaged";
        case ParseStatus::FallbackApplied: return "fallback";
    }
    throw Error("invalid parse status");
}

std::string to_token(FallbackPolicy policy) {
    switch (policy) {
        case FallbackPolicy::AtRisk: return "at_risk";
        case FallbackPolicy::NoRisk: return "no_risk";
        case FallbackPolicy::Error: return "error";
    }
    throw Error("invalid fallback policy");
}

FallbackPolicy fallback_policy_from_token(const std::string& token) {
    if (token == "at_risk") return FallbackPolicy::AtRisk;
    if (token == "no_risk") return FallbackPolicy::NoRisk;
    if (token == "error") return FallbackPolicy::Error;
    throw Error("unknown fallback policy '" + token + "'");
}

Unparseable::Unparseable(const std::string& id, const std::string& text)
    : Error("no verdict found in completion for subject '" + id + "': " + text),
      subject_id(id),
      excerpt(text) {}

namespace {

constexpr char kAnswerMarker[] = "[[ ## answer ## ]]";
constexpr char kReasoningMarker[] = "[[ ## reasoning ## ]]";
constexpr char kMarkerPrefix[] = "[[ ##";

struct TableEntry {
    const char* token;
    Label label;
    bool ascii;  // word-bounded matching; CJK entries match as substrings
};

// Longest entries first so "not at risk" wins over "at risk" and CJK
// compounds over their last character.
constexpr std::array<TableEntry, 12> kTable{{
    {"not at risk", Label::NoRisk, true},
    {"at risk", Label::AtRisk, true},
    {"at_risk", Label::AtRisk, true},
    {"no_risk", Label::NoRisk, true},
    {"\xe6\xb2\xa1\xe6\x9c\x89", Label::NoRisk, false},  // 没有
    {"yes", Label::AtRisk, true},
    {"no", Label::NoRisk, true},
    {"\xe6\x98\xaf", Label::AtRisk, false},  // 是
    {"\xe6\x9c\x89", Label::AtRisk, false},  // 有
    {"\xe5\x90\xa6", Label::NoRisk, false},  // 否
    {"y", Label::AtRisk, true},
    {"n", Label::NoRisk, true},
}};

bool word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

std::optional<Label> normalize_exact(const std::string& trimmed_lower) {
    for (const auto& entry : kTable)
        if (trimmed_lower == entry.token) return entry.label;
    return std::nullopt;
}

/// Scans lowered text for table entries, longest token first, skipping
/// spans already claimed by a longer entry. Returns all surviving matches.
std::vector<Label> scan_matches(const std::string& lowered) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::vector<std::pair<std::size_t, Label>> hits;

    auto overlaps = [&spans](std::size_t begin, std::size_t end) {
        for (const auto& span : spans)
            if (begin < span.second && span.first < end) return true;
        return false;
    };

    for (const auto& entry : kTable) {
        const std::string token = entry.token;
        std::size_t pos = 0;
        while ((pos = lowered.find(token, pos)) != std::string::npos) {
            const std::size_t end = pos + token.size();
            bool bounded = true;
            if (entry.ascii) {
                if (pos > 0 && word_char(lowered[pos - 1])) bounded = false;
                if (end < lowered.size() && word_char(lowered[end])) bounded = false;
            }
            if (bounded && !overlaps(pos, end)) {
                spans.emplace_back(pos, end);
                hits.emplace_back(pos, entry.label);
            }
            pos = end;
        }
    }
    std::sort(hits.begin(), hits.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Label> labels;
    labels.reserve(hits.size());
    for (const auto& hit : hits) labels.push_back(hit.second);
    return labels;
}

std::string segment_after(const std::string& text, std::size_t marker_end) {
    const auto next = text.find(kMarkerPrefix, marker_end);
    return text.substr(marker_end, next == std::string::npos
                                       ? std::string::npos
                                       : next - marker_end);
}

std::string excerpt_of(const std::string& text) {
    constexpr std::size_t kMax = 120;
    if (text.size() <= kMax) return text;
    return text.substr(0, kMax) + "...";
}

}  // namespace

PredictionRecord parse_completion(const std::string& subject_id,
                                  const std::string& text, PromptMode mode,
                                  FallbackPolicy fallback) {
    PredictionRecord record;
    record.subject_id = subject_id;
    record.raw_completion = text;

    if (mode == PromptMode::FewShotCoT) {
        const auto marker = text.find(kReasoningMarker);
        if (marker != std::string::npos) {
            const std::string body =
                trim(segment_after(text, marker + sizeof(kReasoningMarker) - 1));
            if (!body.empty()) record.rationale = body;
        }
    }

    const auto answer = text.find(kAnswerMarker);
    if (answer != std::string::npos) {
        const std::string segment =
            trim(segment_after(text, answer + sizeof(kAnswerMarker) - 1));
        if (auto label = normalize_exact(lower_ascii(segment))) {
            record.predicted = *label;
            record.parse_status = ParseStatus::Clean;
            return record;
        }
        const std::string first_line = trim(segment.substr(0, segment.find('\n')));
        if (auto label = normalize_exact(lower_ascii(first_line))) {
            record.predicted = *label;
            record.parse_status = ParseStatus::Clean;
            return record;
        }
    }

    const auto matches = scan_matches(lower_ascii(text));
    if (matches.size() == 1) {
        record.predicted = matches.front();
        record.parse_status = ParseStatus::Salvaged;
        return record;
    }

    switch (fallback) {
        case FallbackPolicy::AtRisk:
            record.predicted = Label::AtRisk;
            break;
        case FallbackPolicy::NoRisk:
            record.predicted = Label::NoRisk;
            break;
        case FallbackPolicy::Error:
            throw Unparseable(subject_id, excerpt_of(text));
    }
    record.parse_status = ParseStatus::FallbackApplied;
    return record;
}

}  // namespace risklab
