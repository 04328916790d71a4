#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "risklab/common.hpp"
#include "risklab/corpus.hpp"
#include "risklab/parser.hpp"

namespace risklab {

/// Positive class is AtRisk throughout.
struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;
};

struct RunMeta {
    std::string mode;
    int k = 0;
    std::uint64_t seed = 0;
    std::string model_name;
};

struct EvalReport {
    double accuracy = 0.0;
    double f1 = 0.0;
    ConfusionMatrix matrix;
    std::int64_t n = 0;
    Split per_split = Split::Dev;
    RunMeta run_meta;
};

struct MissingPrediction : Error {
    explicit MissingPrediction(const std::string& subject_id);
    std::string subject_id;
};

struct UnknownSubject : Error {
    explicit UnknownSubject(const std::string& subject_id);
    std::string subject_id;
};

struct DuplicatePrediction : Error {
    explicit DuplicatePrediction(const std::string& subject_id);
    std::string subject_id;
};

/// Scores predictions against the labels of one split. Every subject in the
/// split needs exactly one prediction; predictions for subjects outside the
/// split (or corpus) are rejected.
EvalReport evaluate(const std::vector<PredictionRecord>& predictions,
                    const Corpus& truth, Split split, RunMeta meta = {});

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

}  // namespace risklab
