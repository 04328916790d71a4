#include "risklab/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace risklab {

using nlohmann::json;

const char* to_token(TaskTag t) {
    switch (t) {
        case TaskTag::Task1: return "task1";
        case TaskTag::Task2: return "task2";
        case TaskTag::Reading: return "reading";
    }
    return "?";
}

std::optional<TaskTag> task_from_token(const std::string& t) {
    if (t == "task1") return TaskTag::Task1;
    if (t == "task2") return TaskTag::Task2;
    if (t == "reading") return TaskTag::Reading;
    return std::nullopt;
}

const SliceEmbeddingSet* EmbeddingDataset::find(const std::string& subject_id) const {
    auto it = index_.find(subject_id);
    return it == index_.end() ? nullptr : &subjects_[it->second];
}

void EmbeddingDataset::add_slice(const std::string& subject_id, TaskTag task, int slice_index,
                                 std::vector<double> vec, int line) {
    if (vec.empty()) throw MalformedRow(line, "vector is empty");
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_)
        throw MalformedRow(line, "vector has dimension " + std::to_string(vec.size()) +
                                     ", expected " + std::to_string(dim_));
    if (slice_index < 0) throw MalformedRow(line, "slice_index must be >= 0");

    auto it = index_.find(subject_id);
    if (it == index_.end()) {
        index_.emplace(subject_id, subjects_.size());
        subjects_.push_back({subject_id, {}});
        it = index_.find(subject_id);
    }
    auto& set = subjects_[it->second];
    for (const auto& s : set.slices) {
        if (s.task == task && s.slice_index == slice_index)
            throw MalformedRow(line, "duplicate (task, slice_index) for subject " + subject_id);
    }
    set.slices.push_back({task, slice_index, std::move(vec)});
}

EmbeddingDataset load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embedding file: " + path);
    EmbeddingDataset ds;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw MalformedRow(lineno, std::string("invalid JSON: ") + e.what());
        }
        for (const char* key : {"subject_id", "task", "slice_index", "vector"}) {
            if (!row.contains(key))
                throw MalformedRow(lineno, std::string("missing field \"") + key + "\"");
        }
        if (!row["subject_id"].is_string()) throw MalformedRow(lineno, "subject_id must be a string");
        auto task = row["task"].is_string() ? task_from_token(row["task"].get<std::string>())
                                            : std::nullopt;
        if (!task) throw MalformedRow(lineno, "task must be task1, task2 or reading");
        if (!row["slice_index"].is_number_integer())
            throw MalformedRow(lineno, "slice_index must be an integer");
        if (!row["vector"].is_array()) throw MalformedRow(lineno, "vector must be an array");
        std::vector<double> vec;
        vec.reserve(row["vector"].size());
        for (const auto& v : row["vector"]) {
            if (!v.is_number()) throw MalformedRow(lineno, "vector entries must be numbers");
            double x = v.get<double>();
            if (!std::isfinite(x)) throw MalformedRow(lineno, "vector entries must be finite");
            vec.push_back(x);
        }
        ds.add_slice(row["subject_id"].get<std::string>(), *task, row["slice_index"].get<int>(),
                     std::move(vec), lineno);
    }
    return ds;
}

NoSlicesForTasks::NoSlicesForTasks(const std::string& id)
    : Error("subject " + id + " has no slices for the selected tasks"), subject_id(id) {}

namespace {

bool selected(TaskTag t, const std::vector<TaskTag>& tasks) {
    return std::find(tasks.begin(), tasks.end(), t) != tasks.end();
}

}  // namespace

SubjectScore classify_subject(const LogisticModel& model, const SliceEmbeddingSet& set,
                              const std::vector<TaskTag>& tasks, const PoolingSpec& spec,
                              double threshold) {
    std::vector<double> probs;
    for (const auto& s : set.slices) {
        if (selected(s.task, tasks)) probs.push_back(predict_proba(model, s.vector));
    }
    if (probs.empty()) throw NoSlicesForTasks(set.subject_id);
    const double score = pool(probs, spec);
    return {score >= threshold ? Label::AtRisk : Label::NoRisk, score};
}

LabeledSlices collect_training_slices(const EmbeddingDataset& ds, const Corpus& corpus, Split split,
                                      const std::vector<TaskTag>& tasks) {
    LabeledSlices out;
    out.dim = ds.dim();
    for (const auto& subject : corpus.subjects()) {
        if (subject.split != split) continue;
        const SliceEmbeddingSet* set = ds.find(subject.subject_id);
        if (!set) continue;
        for (const auto& s : set->slices) {
            if (selected(s.task, tasks)) out.push_row(s.vector, subject.label == Label::AtRisk);
        }
    }
    return out;
}

}  // namespace risklab
