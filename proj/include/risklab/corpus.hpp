#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "risklab/common.hpp"

namespace risklab {

enum class Sex { F, M };
enum class Label { AtRisk, NoRisk };
enum class Split { Train, Dev, Test, Unassigned };

const char* to_token(Sex s);
const char* to_token(Label l);    // "at_risk" / "no_risk"
const char* to_token(Split sp);   // "train" / "dev" / "test" / ""
std::optional<Sex> sex_from_token(const std::string& t);
std::optional<Label> label_from_token(const std::string& t);
std::optional<Split> split_from_token(const std::string& t);

/// One participant. Transcripts may be empty strings but are never absent.
/// `rationale` is an optional corpus-side field consumed by chain-of-thought
/// demos; it is empty when the source file does not provide one.
struct SubjectRecord {
    std::string subject_id;
    int age = 0;
    Sex sex = Sex::F;
    std::string transcript_task1;
    std::string transcript_task2;
    Label label = Label::NoRisk;
    Split split = Split::Unassigned;
    std::string rationale;
};

struct LabelCounts {
    int at_risk = 0;
    int no_risk = 0;
    int total() const { return at_risk + no_risk; }
};

/// Immutable after construction; safe to share read-only across workers.
class Corpus {
public:
    Corpus() = default;
    Corpus(std::vector<SubjectRecord> subjects, std::string provenance);

    const std::vector<SubjectRecord>& subjects() const { return subjects_; }
    const std::string& provenance() const { return provenance_; }
    std::size_t size() const { return subjects_.size(); }

    const SubjectRecord* find(const std::string& subject_id) const;

    LabelCounts label_counts() const;
    LabelCounts label_counts(Split split) const;
    int split_size(Split split) const;
    std::vector<const SubjectRecord*> in_split(Split split) const;

private:
    std::vector<SubjectRecord> subjects_;
    std::string provenance_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat { Jsonl, Csv };

struct MalformedRow : Error {
    MalformedRow(int line, const std::string& reason);
    int line;
    std::string reason;
};

struct DuplicateSubject : Error {
    explicit DuplicateSubject(const std::string& subject_id);
    std::string subject_id;
};

struct EmptyStratum : Error {
    explicit EmptyStratum(const std::string& cell);
    std::string cell;
};

struct InvalidFractions : Error {
    explicit InvalidFractions(const std::string& why);
};

Corpus load_corpus(const std::string& path, CorpusFormat format);
void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format);

enum class StratumKey { Label, Sex, AgeBand };
std::optional<StratumKey> stratum_key_from_token(const std::string& t);

struct SplitFractions {
    double train = 0.0;
    double dev = 0.0;
    double test = 0.0;
};

// Band index for the fixed {10-12, 13-15, 16-18} bands. Ages outside the
// expected range fall into the nearest band.
int age_band(int age);
const char* age_band_name(int band);

// The stratum cell a subject falls into, e.g. "label=at_risk|sex=F".
// Exactly the grouping stratified_split uses.
std::string stratum_cell_name(const SubjectRecord& record,
                              const std::vector<StratumKey>& strata);

/// Seeded stratified assignment. Within every stratum cell the split counts
/// follow the fractions under largest-remainder rounding (ties broken
/// train, dev, test). Returns a new corpus; the input is untouched.
Corpus stratified_split(const Corpus& corpus, SplitFractions fractions,
                        const std::vector<StratumKey>& strata, std::uint64_t seed);

// RFC 4180 reader used by the CSV path; exposed for tests. Handles quoted
// fields containing commas, doubled quotes and embedded newlines. Returns
// one vector per record plus the 1-based physical line each record starts on.
std::vector<std::pair<int, std::vector<std::string>>> parse_csv(const std::string& text);
std::string csv_escape(const std::string& field);

}  // namespace risklab
