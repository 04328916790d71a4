#pragma once

#include <optional>
#include <string>
#include <vector>

#include "risklab/corpus.hpp"
#include "risklab/logistic.hpp"
#include "risklab/pooling.hpp"

namespace risklab {

enum class TaskTag { Task1, Task2, Reading };

const char* to_token(TaskTag t);  // "task1" / "task2" / "reading"
std::optional<TaskTag> task_from_token(const std::string& t);

struct EmbeddingSlice {
    TaskTag task = TaskTag::Task1;
    int slice_index = 0;
    std::vector<double> vector;
};

struct SliceEmbeddingSet {
    std::string subject_id;
    std::vector<EmbeddingSlice> slices;  // file order preserved
};

/// All vectors share one dimension, inferred from the first row of the
/// file and enforced for every later row.
class EmbeddingDataset {
public:
    EmbeddingDataset() = default;

    std::size_t dim() const { return dim_; }
    const std::vector<SliceEmbeddingSet>& subjects() const { return subjects_; }
    const SliceEmbeddingSet* find(const std::string& subject_id) const;

    // line is the 1-based source line, used for error messages.
    void add_slice(const std::string& subject_id, TaskTag task, int slice_index,
                   std::vector<double> vec, int line);

private:
    std::size_t dim_ = 0;
    std::vector<SliceEmbeddingSet> subjects_;
    std::unordered_map<std::string, std::size_t> index_;
};

// JSONL with keys subject_id, task, slice_index, vector.
EmbeddingDataset load_embeddings(const std::string& path);

struct NoSlicesForTasks : Error {
    explicit NoSlicesForTasks(const std::string& subject_id);
    std::string subject_id;
};

struct SubjectScore {
    Label label = Label::NoRisk;
    double score = 0.0;
};

/// Pools per-slice probabilities over the union of slices belonging to the
/// selected tasks. Ties at the threshold classify as at-risk.
SubjectScore classify_subject(const LogisticModel& model, const SliceEmbeddingSet& set,
                              const std::vector<TaskTag>& tasks, const PoolingSpec& spec,
                              double threshold);

/// Slice rows for the subjects of one corpus split, labeled with the
/// subject's risk label. Subjects missing from the dataset are skipped.
LabeledSlices collect_training_slices(const EmbeddingDataset& ds, const Corpus& corpus, Split split,
                                      const std::vector<TaskTag>& tasks);

}  // namespace risklab
