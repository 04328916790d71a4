#include "risklab/evalkit.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace risklab {

MissingPrediction::MissingPrediction(const std::string& id)
    : Error("no prediction for subject '" + id + "'"), subject_id(id) {}

UnknownSubject::UnknownSubject(const std::string& id)
    : Error("prediction for subject '" + id + "' outside the scored split"),
      subject_id(id) {}

DuplicatePrediction::DuplicatePrediction(const std::string& id)
    : Error("multiple predictions for subject '" + id + "'"), subject_id(id) {}

EvalReport evaluate(const std::vector<PredictionRecord>& predictions,
                    const Corpus& truth, Split split, RunMeta meta) {
    std::set<std::string> seen;
    EvalReport report;
    report.per_split = split;
    report.run_meta = std::move(meta);

    for (const auto& prediction : predictions) {
        const auto* record = truth.find(prediction.subject_id);
        if (!record || record->split != split)
            throw UnknownSubject(prediction.subject_id);
        if (!seen.insert(prediction.subject_id).second)
            throw DuplicatePrediction(prediction.subject_id);
        const bool truly_positive = record->label == Label::AtRisk;
        const bool predicted_positive = prediction.predicted == Label::AtRisk;
        if (truly_positive && predicted_positive) ++report.matrix.tp;
        if (!truly_positive && predicted_positive) ++report.matrix.fp;
        if (!truly_positive && !predicted_positive) ++report.matrix.tn;
        if (truly_positive && !predicted_positive) ++report.matrix.fn;
    }

    for (const auto& record : truth.subjects())
        if (record.split == split && !seen.count(record.subject_id))
            throw MissingPrediction(record.subject_id);

    const auto& m = report.matrix;
    report.n = m.tp + m.fp + m.tn + m.fn;
    report.accuracy =
        report.n > 0 ? static_cast<double>(m.tp + m.tn) / report.n : 0.0;
    const auto f1_denom = 2 * m.tp + m.fp + m.fn;
    report.f1 = f1_denom > 0 ? static_cast<double>(2 * m.tp) / f1_denom : 0.0;
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    return {{"accuracy", report.accuracy},
            {"f1", report.f1},
            {"n", report.n},
            {"split", to_token(report.per_split)},
            {"matrix",
             {{"tp", report.matrix.tp},
              {"fp", report.matrix.fp},
              {"tn", report.matrix.tn},
              {"fn", report.matrix.fn}}},
            {"run_meta",
             {{"mode", report.run_meta.mode},
              {"k", report.run_meta.k},
              {"seed", report.run_meta.seed},
              {"model_name", report.run_meta.model_name}}}};
}

std::string report_to_text(const EvalReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line),
                  "split=%s  n=%lld  accuracy=%.4f  f1=%.4f\n",
                  to_token(report.per_split),
                  static_cast<long long>(report.n), report.accuracy, report.f1);
    out << line;
    if (!report.run_meta.model_name.empty() || !report.run_meta.mode.empty()) {
        std::snprintf(line, sizeof(line), "model=%s  mode=%s  k=%d  seed=%llu\n",
                      report.run_meta.model_name.c_str(),
                      report.run_meta.mode.c_str(), report.run_meta.k,
                      static_cast<unsigned long long>(report.run_meta.seed));
        out << line;
    }
    const auto& m = report.matrix;
    out << "                 predicted\n";
    out << "                 at_risk   no_risk\n";
    std::snprintf(line, sizeof(line), "true at_risk   %7lld   %7lld\n",
                  static_cast<long long>(m.tp), static_cast<long long>(m.fn));
    out << line;
    std::snprintf(line, sizeof(line), "true no_risk   %7lld   %7lld\n",
                  static_cast<long long>(m.fp), static_cast<long long>(m.tn));
    out << line;
    return out.str();
}

}  // namespace risklab
