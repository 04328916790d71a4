#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "risklab/evalkit.hpp"

#include "testutil.hpp"

using namespace risklab;

namespace {

PredictionRecord pred(const std::string& id, Label label) {
    PredictionRecord record;
    record.subject_id = id;
    record.predicted = label;
    return record;
}

// n_at at_risk then n_no no_risk subjects, all in the dev split.
Corpus dev_corpus(int n_at, int n_no) {
    std::vector<SubjectRecord> records;
    for (int i = 0; i < n_at; ++i)
        records.push_back(testutil::subject("P" + std::to_string(i),
                                            Label::AtRisk, Split::Dev));
    for (int i = 0; i < n_no; ++i)
        records.push_back(testutil::subject("Q" + std::to_string(i),
                                            Label::NoRisk, Split::Dev));
    return Corpus(std::move(records));
}

}  // namespace

TEST_CASE("perfect predictions score 1.0") {
    const auto corpus = testutil::tiny_corpus();
    std::vector<PredictionRecord> predictions = {
        pred("D1", Label::AtRisk), pred("D2", Label::AtRisk),
        pred("D3", Label::NoRisk), pred("D4", Label::NoRisk)};
    const auto report = evaluate(predictions, corpus, Split::Dev);
    CHECK(report.accuracy == 1.0);
    CHECK(report.f1 == 1.0);
    CHECK(report.n == 4);
    CHECK(report.matrix.tp == 2);
    CHECK(report.matrix.tn == 2);
    CHECK(report.matrix.fp == 0);
    CHECK(report.matrix.fn == 0);
}

TEST_CASE("confusion matrix and derived metrics on a mixed outcome") {
    // 5 at_risk, 5 no_risk; tp=4 fn=1 fp=2 tn=3.
    const auto corpus = dev_corpus(5, 5);
    std::vector<PredictionRecord> predictions;
    for (int i = 0; i < 4; ++i)
        predictions.push_back(pred("P" + std::to_string(i), Label::AtRisk));
    predictions.push_back(pred("P4", Label::NoRisk));
    for (int i = 0; i < 2; ++i)
        predictions.push_back(pred("Q" + std::to_string(i), Label::AtRisk));
    for (int i = 2; i < 5; ++i)
        predictions.push_back(pred("Q" + std::to_string(i), Label::NoRisk));

    const auto report = evaluate(predictions, corpus, Split::Dev);
    CHECK(report.matrix.tp == 4);
    CHECK(report.matrix.fn == 1);
    CHECK(report.matrix.fp == 2);
    CHECK(report.matrix.tn == 3);
    CHECK(report.n == 10);
    CHECK(report.accuracy == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(report.f1 == doctest::Approx(8.0 / 11.0).epsilon(1e-12));
}

TEST_CASE("predicting the positive class everywhere on a balanced split") {
    const auto corpus = dev_corpus(25, 25);
    std::vector<PredictionRecord> predictions;
    for (const auto& record : corpus.subjects())
        predictions.push_back(pred(record.subject_id, Label::AtRisk));
    const auto report = evaluate(predictions, corpus, Split::Dev);
    CHECK(report.accuracy == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(report.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("swapping both labels swaps tp with tn and fp with fn") {
    const auto corpus = dev_corpus(3, 7);
    std::vector<PredictionRecord> predictions;
    int i = 0;
    for (const auto& record : corpus.subjects())
        predictions.push_back(pred(record.subject_id,
                                   ++i % 3 == 0 ? Label::AtRisk : Label::NoRisk));
    const auto report = evaluate(predictions, corpus, Split::Dev);

    // Flip every truth label and every prediction.
    std::vector<SubjectRecord> flipped_records;
    for (auto record : corpus.subjects()) {
        record.label =
            record.label == Label::AtRisk ? Label::NoRisk : Label::AtRisk;
        flipped_records.push_back(std::move(record));
    }
    const Corpus flipped(std::move(flipped_records));
    auto flipped_predictions = predictions;
    for (auto& prediction : flipped_predictions)
        prediction.predicted = prediction.predicted == Label::AtRisk
                                   ? Label::NoRisk
                                   : Label::AtRisk;
    const auto dual = evaluate(flipped_predictions, flipped, Split::Dev);

    CHECK(dual.matrix.tp == report.matrix.tn);
    CHECK(dual.matrix.tn == report.matrix.tp);
    CHECK(dual.matrix.fp == report.matrix.fn);
    CHECK(dual.matrix.fn == report.matrix.fp);
    CHECK(dual.accuracy == report.accuracy);
    CHECK(dual.n == report.n);
}

TEST_CASE("prediction order does not matter") {
    const auto corpus = dev_corpus(6, 6);
    std::vector<PredictionRecord> predictions;
    int i = 0;
    for (const auto& record : corpus.subjects())
        predictions.push_back(pred(record.subject_id,
                                   ++i % 2 ? Label::AtRisk : Label::NoRisk));
    const auto before = evaluate(predictions, corpus, Split::Dev);
    std::reverse(predictions.begin(), predictions.end());
    const auto after = evaluate(predictions, corpus, Split::Dev);
    CHECK(before.accuracy == after.accuracy);
    CHECK(before.f1 == after.f1);
    CHECK(before.matrix.tp == after.matrix.tp);
    CHECK(before.matrix.fp == after.matrix.fp);
    CHECK(before.matrix.tn == after.matrix.tn);
    CHECK(before.matrix.fn == after.matrix.fn);
}

TEST_CASE("metrics stay within the unit interval") {
    testutil::Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        const int n_at = 1 + static_cast<int>(rng.below(8));
        const int n_no = 1 + static_cast<int>(rng.below(8));
        const auto corpus = dev_corpus(n_at, n_no);
        std::vector<PredictionRecord> predictions;
        for (const auto& record : corpus.subjects())
            predictions.push_back(pred(
                record.subject_id,
                rng.below(2) == 0 ? Label::AtRisk : Label::NoRisk));
        const auto report = evaluate(predictions, corpus, Split::Dev);
        CHECK(report.accuracy >= 0.0);
        CHECK(report.accuracy <= 1.0);
        CHECK(report.f1 >= 0.0);
        CHECK(report.f1 <= 1.0);
    }
}

TEST_CASE("f1 is zero when there are no positive calls at all") {
    const auto corpus = dev_corpus(2, 2);
    std::vector<PredictionRecord> predictions;
    for (const auto& record : corpus.subjects())
        predictions.push_back(pred(record.subject_id, Label::NoRisk));
    const auto report = evaluate(predictions, corpus, Split::Dev);
    CHECK(report.matrix.tp == 0);
    CHECK(report.f1 == 0.0);
    CHECK(report.accuracy == 0.5);
}

TEST_CASE("every subject in the split needs a prediction") {
    const auto corpus = testutil::tiny_corpus();
    std::vector<PredictionRecord> predictions = {
        pred("D1", Label::AtRisk), pred("D2", Label::AtRisk),
        pred("D3", Label::NoRisk)};
    try {
        evaluate(predictions, corpus, Split::Dev);
        FAIL("expected MissingPrediction");
    } catch (const MissingPrediction& e) {
        CHECK(e.subject_id == "D4");
    }
}

TEST_CASE("predictions outside the corpus or split are rejected") {
    const auto corpus = testutil::tiny_corpus();
    auto predictions = std::vector<PredictionRecord>{
        pred("D1", Label::AtRisk), pred("D2", Label::AtRisk),
        pred("D3", Label::NoRisk), pred("D4", Label::NoRisk)};

    auto with_ghost = predictions;
    with_ghost.push_back(pred("GHOST", Label::AtRisk));
    try {
        evaluate(with_ghost, corpus, Split::Dev);
        FAIL("expected UnknownSubject");
    } catch (const UnknownSubject& e) {
        CHECK(e.subject_id == "GHOST");
    }

    // A1 exists but sits in the train split.
    auto with_train = predictions;
    with_train.push_back(pred("A1", Label::AtRisk));
    CHECK_THROWS_AS(evaluate(with_train, corpus, Split::Dev), UnknownSubject);
}

TEST_CASE("duplicate predictions are rejected") {
    const auto corpus = testutil::tiny_corpus();
    std::vector<PredictionRecord> predictions = {
        pred("D1", Label::AtRisk), pred("D1", Label::NoRisk),
        pred("D2", Label::AtRisk), pred("D3", Label::NoRisk),
        pred("D4", Label::NoRisk)};
    try {
        evaluate(predictions, corpus, Split::Dev);
        FAIL("expected DuplicatePrediction");
    } catch (const DuplicatePrediction& e) {
        CHECK(e.subject_id == "D1");
    }
}

TEST_CASE("report serialization") {
    const auto corpus = testutil::tiny_corpus();
    std::vector<PredictionRecord> predictions = {
        pred("D1", Label::AtRisk), pred("D2", Label::NoRisk),
        pred("D3", Label::NoRisk), pred("D4", Label::AtRisk)};
    RunMeta meta;
    meta.mode = "few_shot";
    meta.k = 4;
    meta.seed = 7;
    meta.model_name = "mock-gemma-9b";
    const auto report = evaluate(predictions, corpus, Split::Dev, meta);

    const auto json = report_to_json(report);
    CHECK(json["accuracy"] == report.accuracy);
    CHECK(json["f1"] == report.f1);
    CHECK(json["n"] == 4);
    CHECK(json["split"] == "dev");
    CHECK(json["matrix"]["tp"] == 1);
    CHECK(json["matrix"]["fp"] == 1);
    CHECK(json["matrix"]["tn"] == 1);
    CHECK(json["matrix"]["fn"] == 1);
    CHECK(json["run_meta"]["mode"] == "few_shot");
    CHECK(json["run_meta"]["k"] == 4);
    CHECK(json["run_meta"]["seed"] == 7);
    CHECK(json["run_meta"]["model_name"] == "mock-gemma-9b");

    const auto text = report_to_text(report);
    CHECK(text.find("split=dev") != std::string::npos);
    CHECK(text.find("accuracy=0.5000") != std::string::npos);
    CHECK(text.find("model=mock-gemma-9b") != std::string::npos);
    CHECK(text.find("predicted") != std::string::npos);
}

TEST_CASE("empty split evaluates to zero metrics") {
    const Corpus corpus(std::vector<SubjectRecord>{
        testutil::subject("T1", Label::AtRisk, Split::Train)});
    const auto report = evaluate({}, corpus, Split::Dev);
    CHECK(report.n == 0);
    CHECK(report.accuracy == 0.0);
    CHECK(report.f1 == 0.0);
}
