#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "risklab/backend.hpp"
#include "risklab/common.hpp"
#include "risklab/corpus.hpp"
#include "risklab/parser.hpp"
#include "risklab/prompt.hpp"
#include "risklab/stats.hpp"

namespace risklab {

struct ModelSpec {
    std::string model_name;  // wire name, e.g. "gemma-2-9b-it"
    std::string model_type;  // architecture tag, e.g. "gemma"
    double model_size_b = 0.0;
};

struct GridSpec {
    std::vector<int> shot_counts;
    std::vector<ModelSpec> models;
    std::vector<std::uint64_t> seeds;
    PromptMode mode = PromptMode::FewShot;  // k = 0 cells render zero-shot
    bool balanced_demos = true;
};

enum class RunStatus { Ok, ContextOverflow, Failed };

std::string to_token(RunStatus status);
RunStatus run_status_from_token(const std::string& token);

struct RunRecord {
    int k = 0;
    std::string model_name;
    std::string model_type;
    double model_size_b = 0.0;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::Ok;
    std::optional<double> accuracy;  // present only when status == Ok
    std::optional<double> f1;
    std::string started;   // ISO-8601 UTC
    std::string finished;
    std::vector<std::string> demo_ids;
    std::optional<std::string> error;
};

using BackendFactory =
    std::function<std::unique_ptr<Backend>(const ModelSpec&)>;

struct GridOptions {
    int workers = 4;
    bool force = false;          // re-run cells that already have records
    std::string records_path;    // empty: keep records in memory only
    std::shared_ptr<Clock> clock;  // default: system clock
    FallbackPolicy fallback = FallbackPolicy::AtRisk;
};

/// Runs every (model, k, seed) cell: sample demos once, prompt every Dev
/// subject, parse, evaluate. Per-cell trouble lands in the record's status
/// (ContextOverflow cells become N/A downstream); only an invalid spec or
/// corpus aborts the grid. Cells already persisted in records_path are
/// skipped unless forced; new records append in completion order. The
/// factory is invoked once per cell and must tolerate concurrent calls.
/// Returns the full grid in spec order.
std::vector<RunRecord> run_grid(const GridSpec& spec, const Corpus& corpus,
                                const BackendFactory& factory,
                                const GridOptions& options = {});

std::vector<RunRecord> load_run_records(const std::string& path);

nlohmann::json run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& json);

struct CellSummary {
    int k = 0;
    std::string model_name;
    int n_ok = 0;
    int n_total = 0;
    std::optional<double> mean_accuracy;
    std::optional<double> sd_accuracy;  // sample sd; needs n_ok >= 2
    std::string display;                // "0.60 (.07)", "0.60 (—)", "N/A"
};

/// Groups records by (k, model) and reduces accuracy across seeds to
/// mean and sample standard deviation.
std::vector<CellSummary> summarize_grid(const std::vector<RunRecord>& records);

/// Aligned table, rows = shot counts ascending, columns = models in first
/// appearance order.
std::string grid_table_text(const std::vector<RunRecord>& records);
std::string grid_table_csv(const std::vector<RunRecord>& records);

/// Ok records as a regression table: accuracy, example_count, model_size,
/// model_type.
DataTable records_to_table(const std::vector<RunRecord>& records);

}  // namespace risklab
