// Command-line harness: corpus splitting, single classification runs, grid
// ablations, the embedding baseline, and regression reports over run
// records.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "risklab/ablation.hpp"
#include "risklab/backend.hpp"
#include "risklab/config.hpp"
#include "risklab/corpus.hpp"
#include "risklab/embeddings.hpp"
#include "risklab/evalkit.hpp"
#include "risklab/parser.hpp"
#include "risklab/prompt.hpp"
#include "risklab/stats.hpp"
#include "risklab/tdist.hpp"

namespace fs = std::filesystem;
using namespace risklab;

namespace {

std::shared_ptr<Clock> clock_for(const RunConfig& config) {
    // Mock-backed runs promise byte-identical artifacts, so they get a
    // frozen clock; live runs keep real timestamps.
    if (config.backend.kind == "mock") return std::make_shared<FixedClock>(0);
    return std::make_shared<SystemClock>();
}

std::string compact_timestamp(const Clock& clock) {
    std::string out;
    for (char c : iso8601_utc(clock.now_ms()))
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(c);
    return out;  // e.g. 19700101T000000Z
}

fs::path make_run_dir(const RunConfig& config, const std::string& subcommand,
                      const std::string& override_dir, const Clock& clock) {
    if (!override_dir.empty()) {
        fs::create_directories(override_dir);
        return override_dir;
    }
    const fs::path base = config.output_dir.empty() ? "runs" : config.output_dir;
    const std::string stem = compact_timestamp(clock) + "-" + subcommand;
    fs::path dir = base / stem;
    for (int suffix = 2; fs::exists(dir); ++suffix)
        dir = base / (stem + "-" + std::to_string(suffix));
    fs::create_directories(dir);
    return dir;
}

void write_config_snapshot(const RunConfig& config, const fs::path& run_dir) {
    write_text_file((run_dir / "config.json").string(),
                    config_to_redacted_json(config).dump(2) + "\n");
}

nlohmann::json prediction_to_json(const PredictionRecord& prediction) {
    nlohmann::json row = {{"subject_id", prediction.subject_id},
                          {"predicted", to_token(prediction.predicted)},
                          {"parse_status", to_token(prediction.parse_status)},
                          {"raw_completion", prediction.raw_completion},
                          {"latency_ms", prediction.exchange_meta.latency_ms},
                          {"attempt_count", prediction.exchange_meta.attempt_count}};
    if (prediction.rationale) row["rationale"] = *prediction.rationale;
    return row;
}

// ---------------------------------------------------------------- split ---

struct SplitArgs {
    std::string config_path;
    std::string corpus;
    std::string format;
    std::string out;
    std::string out_dir;
    std::vector<double> fractions;
    std::vector<std::string> strata;
    std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const std::string& config_path) {
    return config_path.empty() ? RunConfig{} : load_config(config_path);
}

void apply_corpus_overrides(RunConfig& config, const std::string& corpus,
                            const std::string& format) {
    if (!corpus.empty()) config.corpus_path = corpus;
    if (!format.empty()) {
        if (format == "jsonl")
            config.corpus_format = CorpusFormat::Jsonl;
        else if (format == "csv")
            config.corpus_format = CorpusFormat::Csv;
        else
            throw ConfigError("--format must be jsonl or csv");
    }
    if (config.corpus_path.empty())
        throw ConfigError("no corpus path (use --corpus or corpus.path)");
}

int cmd_split(const SplitArgs& args) {
    RunConfig config = resolve_config(args.config_path);
    apply_corpus_overrides(config, args.corpus, args.format);
    if (!args.fractions.empty()) {
        if (args.fractions.size() != 3)
            throw ConfigError("--fractions needs exactly 3 values");
        config.split.fractions = {args.fractions[0], args.fractions[1],
                                  args.fractions[2]};
    }
    if (!args.strata.empty()) {
        config.split.strata.clear();
        for (const auto& token : args.strata) {
            const auto key = stratum_key_from_token(token);
            if (!key) throw ConfigError("unknown stratum '" + token + "'");
            config.split.strata.push_back(*key);
        }
    }
    if (args.seed) config.split.seed = *args.seed;

    const auto format = corpus_format_for(config);
    const Corpus corpus = load_corpus(config.corpus_path, format);
    const Corpus split = stratified_split(corpus, config.split.fractions,
                                          config.split.strata, config.split.seed);

    const auto clock = clock_for(config);
    const fs::path run_dir = make_run_dir(config, "split", args.out_dir, *clock);
    write_config_snapshot(config, run_dir);

    std::string out_path = args.out;
    if (out_path.empty()) {
        out_path =
            (run_dir / (format == CorpusFormat::Csv ? "corpus.csv"
                                                    : "corpus.jsonl"))
                .string();
    }
    save_corpus(split, out_path, format);

    // Per-stratum split table.
    std::map<std::string, std::array<int, 3>> table;
    for (const auto& record : split.subjects()) {
        auto& row = table[stratum_cell_name(record, config.split.strata)];
        if (record.split == Split::Train) ++row[0];
        if (record.split == Split::Dev) ++row[1];
        if (record.split == Split::Test) ++row[2];
    }
    std::size_t width = 7;  // "stratum"
    for (const auto& [cell, counts] : table) width = std::max(width, cell.size());

    std::ostringstream out;
    out << "stratum" << std::string(width - 7, ' ')
        << "  train    dev   test  total\n";
    std::array<int, 3> totals{};
    for (const auto& [cell, counts] : table) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "  %5d  %5d  %5d  %5d", counts[0],
                      counts[1], counts[2], counts[0] + counts[1] + counts[2]);
        out << cell << std::string(width - cell.size(), ' ') << buf << "\n";
        for (int j = 0; j < 3; ++j) totals[j] += counts[j];
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "  %5d  %5d  %5d  %5d", totals[0],
                  totals[1], totals[2], totals[0] + totals[1] + totals[2]);
    out << "total" << std::string(width - 5, ' ') << buf << "\n";

    std::cout << out.str();
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

// ------------------------------------------------------------- classify ---

struct ClassifyArgs {
    std::string config_path;
    std::string corpus;
    std::string format;
    std::string out_dir;
    std::optional<int> k;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::optional<bool> balanced;
    std::string fallback;
    std::string split;
    std::string model;
    std::optional<int> workers;
};

/// Runs the backend over a fixed subject list with a bounded pool; results
/// land at their subject's index so output order never depends on timing.
std::vector<PredictionRecord> classify_subjects(
    const std::vector<const SubjectRecord*>& subjects,
    const std::vector<Demo>& demos, PromptMode mode, std::uint64_t seed,
    Backend& backend, FallbackPolicy fallback, int workers) {
    std::vector<std::optional<PredictionRecord>> slots(subjects.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mu;
    std::exception_ptr first_error;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= subjects.size()) break;
            {
                std::lock_guard<std::mutex> lock(error_mu);
                if (first_error) break;
            }
            try {
                const auto bundle = render_prompt(*subjects[i], demos, mode, seed);
                const auto exchange = backend.complete(bundle);
                auto prediction =
                    parse_completion(subjects[i]->subject_id,
                                     exchange.response_text, mode, fallback);
                prediction.exchange_meta = {exchange.latency_ms,
                                            exchange.attempt_count};
                slots[i] = std::move(prediction);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                break;
            }
        }
    };

    const std::size_t thread_count = std::min<std::size_t>(
        static_cast<std::size_t>(std::max(workers, 1)), subjects.size());
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < thread_count; ++i) threads.emplace_back(worker);
        for (auto& thread : threads) thread.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<PredictionRecord> predictions;
    predictions.reserve(subjects.size());
    for (auto& slot : slots) predictions.push_back(std::move(*slot));
    return predictions;
}

int cmd_classify(const ClassifyArgs& args) {
    RunConfig config = resolve_config(args.config_path);
    apply_corpus_overrides(config, args.corpus, args.format);
    if (args.k) config.run.k = *args.k;
    if (!args.mode.empty()) config.run.mode = prompt_mode_from_token(args.mode);
    if (args.seed) config.run.demo_seed = *args.seed;
    if (args.balanced) config.run.balanced = *args.balanced;
    if (!args.fallback.empty())
        config.run.fallback = fallback_policy_from_token(args.fallback);
    if (!args.split.empty()) {
        const auto split = split_from_token(args.split);
        if (!split || *split == Split::Unassigned)
            throw ConfigError("--split must be train, dev, or test");
        config.run.split = *split;
    }
    if (!args.model.empty()) config.backend.http.model_name = args.model;
    if (args.workers) config.workers = *args.workers;
    if (config.run.k < 0) throw ConfigError("k must be >= 0");
    if (config.run.mode == PromptMode::ZeroShot && config.run.k > 0)
        throw ConfigError("zero-shot mode is incompatible with k > 0");

    const Corpus corpus = load_corpus(config.corpus_path, corpus_format_for(config));
    const auto subjects = corpus.in_split(config.run.split);
    if (subjects.empty())
        throw ConfigError(std::string("no subjects in split '") +
                          to_token(config.run.split) + "'");

    const auto demos = sample_demos(corpus, config.run.k, config.run.demo_seed,
                                    config.run.balanced);
    const PromptMode mode =
        config.run.k == 0 ? PromptMode::ZeroShot : config.run.mode;

    const auto backend = make_backend(config.backend);
    const auto predictions =
        classify_subjects(subjects, demos, mode, config.run.demo_seed, *backend,
                          config.run.fallback, config.workers);

    for (const auto& prediction : predictions)
        if (prediction.parse_status != ParseStatus::Clean)
            std::cerr << "note: " << to_token(prediction.parse_status)
                      << " parse for subject " << prediction.subject_id << "\n";

    RunMeta meta{to_token(mode), config.run.k, config.run.demo_seed,
                 config.backend.http.model_name};
    const auto report = evaluate(predictions, corpus, config.run.split, meta);

    const auto clock = clock_for(config);
    const fs::path run_dir = make_run_dir(config, "classify", args.out_dir, *clock);
    write_config_snapshot(config, run_dir);

    std::ostringstream lines;
    for (const auto& prediction : predictions)
        lines << prediction_to_json(prediction).dump() << "\n";
    write_text_file((run_dir / "predictions.jsonl").string(), lines.str());

    nlohmann::json report_json = report_to_json(report);
    nlohmann::json demo_ids = nlohmann::json::array();
    for (const auto& demo : demos) demo_ids.push_back(demo.subject.subject_id);
    report_json["demo_ids"] = demo_ids;
    report_json["generated_at"] = iso8601_utc(clock->now_ms());
    write_text_file((run_dir / "report.json").string(), report_json.dump(2) + "\n");
    write_text_file((run_dir / "report.txt").string(), report_to_text(report));

    std::cout << report_to_text(report);
    std::cout << "wrote " << (run_dir / "predictions.jsonl").string() << "\n";
    return 0;
}

// --------------------------------------------------------------- ablate ---

struct AblateArgs {
    std::string config_path;
    std::string corpus;
    std::string format;
    std::string out_dir;
    std::string records;
    bool force = false;
    std::optional<int> workers;
};

int cmd_ablate(const AblateArgs& args) {
    RunConfig config = resolve_config(args.config_path);
    apply_corpus_overrides(config, args.corpus, args.format);
    if (args.workers) config.workers = *args.workers;
    if (config.grid.shot_counts.empty() || config.grid.models.empty() ||
        config.grid.seeds.empty())
        throw ConfigError("grid section needs shot_counts, models, and seeds");

    const Corpus corpus = load_corpus(config.corpus_path, corpus_format_for(config));
    const auto clock = clock_for(config);
    const fs::path run_dir = make_run_dir(config, "ablate", args.out_dir, *clock);
    write_config_snapshot(config, run_dir);

    GridOptions options;
    options.workers = config.workers;
    options.force = args.force;
    options.records_path =
        args.records.empty() ? (run_dir / "records.jsonl").string() : args.records;
    options.clock = clock;
    options.fallback = config.run.fallback;

    const BackendSection& backend_section = config.backend;
    BackendFactory factory = [&backend_section](const ModelSpec& model) {
        return make_backend(backend_section, model.model_name);
    };

    const auto records = run_grid(config.grid, corpus, factory, options);

    const std::string text = grid_table_text(records);
    write_text_file((run_dir / "summary.txt").string(), text);
    write_text_file((run_dir / "summary.csv").string(), grid_table_csv(records));

    int ok = 0, overflow = 0, failed = 0;
    for (const auto& record : records) {
        if (record.status == RunStatus::Ok) ++ok;
        if (record.status == RunStatus::ContextOverflow) ++overflow;
        if (record.status == RunStatus::Failed) ++failed;
    }

    std::cout << text;
    std::cout << "cells: " << ok << " ok, " << overflow << " context_overflow, "
              << failed << " failed\n";
    for (const auto& record : records)
        if (record.status == RunStatus::Failed && record.error)
            std::cerr << "cell k=" << record.k << " model=" << record.model_name
                      << " seed=" << record.seed << " failed: " << *record.error
                      << "\n";
    std::cout << "records: " << options.records_path << "\n";
    return ok > 0 ? 0 : 1;
}

// ------------------------------------------------------------- baseline ---

struct BaselineArgs {
    std::string config_path;
    std::string corpus;
    std::string format;
    std::string out_dir;
    std::string embeddings;
    std::vector<std::string> poolings;
    std::optional<double> threshold;
    std::string split;
};

int cmd_baseline(const BaselineArgs& args) {
    RunConfig config = resolve_config(args.config_path);
    apply_corpus_overrides(config, args.corpus, args.format);
    if (!args.embeddings.empty()) config.baseline.embeddings_path = args.embeddings;
    if (!args.poolings.empty()) config.baseline.poolings = args.poolings;
    if (args.threshold) config.baseline.threshold = *args.threshold;
    Split eval_split = config.run.split;
    if (!args.split.empty()) {
        const auto split = split_from_token(args.split);
        if (!split || *split == Split::Unassigned)
            throw ConfigError("--split must be train, dev, or test");
        eval_split = *split;
    }
    if (config.baseline.embeddings_path.empty())
        throw ConfigError("no embeddings path (use --embeddings or baseline.embeddings)");

    const Corpus corpus = load_corpus(config.corpus_path, corpus_format_for(config));
    const auto dataset = load_embeddings(config.baseline.embeddings_path);

    const auto slices = collect_training_slices(dataset, corpus, Split::Train,
                                                config.baseline.tasks);
    if (slices.size() == 0)
        throw Error("no training slices: corpus and embeddings do not overlap");
    const auto model =
        train_logistic(slices, config.baseline.l2_lambda, 0,
                       config.baseline.max_iters, config.baseline.tol);

    const auto eval_subjects = corpus.in_split(eval_split);
    if (eval_subjects.empty())
        throw ConfigError(std::string("no subjects in split '") +
                          to_token(eval_split) + "'");

    struct Row {
        std::string pooling;
        EvalReport report;
        std::vector<std::pair<std::string, std::string>> skipped;
    };
    std::vector<Row> rows;

    for (const auto& token : config.baseline.poolings) {
        const auto spec = pooling_spec_from_token(token);
        Row row;
        row.pooling = spec.name();
        std::vector<PredictionRecord> predictions;
        std::vector<SubjectRecord> scored;
        for (const auto* subject : eval_subjects) {
            const auto* set = dataset.find(subject->subject_id);
            if (!set) {
                row.skipped.emplace_back(subject->subject_id,
                                         "no embeddings for subject");
                continue;
            }
            try {
                const auto result =
                    classify_subject(model, *set, config.baseline.tasks, spec,
                                     config.baseline.threshold);
                PredictionRecord prediction;
                prediction.subject_id = subject->subject_id;
                prediction.predicted = result.label;
                prediction.raw_completion = "";  // no LLM involved
                prediction.parse_status = ParseStatus::Clean;
                predictions.push_back(std::move(prediction));
                scored.push_back(*subject);
            } catch (const NoSlicesForTasks&) {
                row.skipped.emplace_back(subject->subject_id,
                                         "no slices for selected tasks");
            }
        }
        if (predictions.empty())
            throw Error("pooling " + row.pooling +
                        ": every subject was skipped; check the embeddings file");
        const Corpus scored_corpus(scored, corpus.provenance());
        RunMeta meta{row.pooling, 0, 0, "logreg"};
        row.report = evaluate(predictions, scored_corpus, eval_split, meta);
        rows.push_back(std::move(row));
    }

    const auto best = std::max_element(
        rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            return a.report.accuracy < b.report.accuracy;
        });

    const auto clock = clock_for(config);
    const fs::path run_dir = make_run_dir(config, "baseline", args.out_dir, *clock);
    write_config_snapshot(config, run_dir);

    std::size_t width = 7;
    for (const auto& row : rows) width = std::max(width, row.pooling.size());
    std::ostringstream text;
    text << "pooling" << std::string(width - 7, ' ')
         << "  accuracy      f1      n  skipped\n";
    for (const auto& row : rows) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "  %8.4f  %6.4f  %5lld  %7zu",
                      row.report.accuracy, row.report.f1,
                      static_cast<long long>(row.report.n), row.skipped.size());
        text << row.pooling << std::string(width - row.pooling.size(), ' ') << buf
             << (&row == &*best ? "  <- best" : "") << "\n";
    }
    for (const auto& row : rows)
        for (const auto& [subject_id, reason] : row.skipped)
            text << "skipped " << subject_id << " (" << row.pooling
                 << "): " << reason << "\n";

    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json skipped = nlohmann::json::array();
        for (const auto& [subject_id, reason] : row.skipped)
            skipped.push_back({{"subject_id", subject_id}, {"reason", reason}});
        nlohmann::json entry = report_to_json(row.report);
        entry["pooling"] = row.pooling;
        entry["skipped"] = skipped;
        rows_json.push_back(std::move(entry));
    }
    nlohmann::json summary = {
        {"rows", rows_json},
        {"best", best->pooling},
        {"training",
         {{"slices", slices.size()},
          {"dim", slices.dim},
          {"iterations", model.training_meta.iterations},
          {"final_loss", model.training_meta.final_loss},
          {"l2_lambda", model.l2_lambda}}}};
    write_text_file((run_dir / "baseline.json").string(), summary.dump(2) + "\n");
    write_text_file((run_dir / "baseline.txt").string(), text.str());

    std::cout << text.str();
    std::cout << "best pooling: " << best->pooling << "\n";
    return 0;
}

// ---------------------------------------------------------------- stats ---

struct StatsArgs {
    std::string config_path;
    std::string records;
    std::string out_dir;
    std::optional<int> max_k;
};

/// The interaction model, reduced when the data cannot identify a term: a
/// single model type loses its dummies (build_design handles that); a
/// constant numeric column would alias the intercept, so it is dropped here
/// with a warning.
DesignSpec adapt_paper_spec(const DataTable& table,
                            std::vector<std::string>* warnings) {
    DesignSpec spec = DesignSpec::paper_model();
    std::vector<std::string> keep;
    for (const auto& term : spec.numeric_terms) {
        const auto& values = table.numeric(term);
        const bool constant =
            std::all_of(values.begin(), values.end(),
                        [&](double v) { return v == values.front(); });
        if (constant && !values.empty()) {
            warnings->push_back("numeric column '" + term +
                                "' is constant; dropped from the model");
        } else {
            keep.push_back(term);
        }
    }
    spec.numeric_terms = keep;
    auto is_main = [&](const std::string& side) {
        if (std::find(keep.begin(), keep.end(), side) != keep.end()) return true;
        for (const auto& term : spec.categorical_terms)
            if (term.name == side) return true;
        return false;
    };
    std::vector<Interaction> interactions;
    for (const auto& pair : spec.interactions)
        if (is_main(pair.a) && is_main(pair.b)) interactions.push_back(pair);
    spec.interactions = interactions;
    return spec;
}

int cmd_stats(const StatsArgs& args) {
    RunConfig config = resolve_config(args.config_path);
    if (args.records.empty()) throw ConfigError("--records is required");

    auto records = load_run_records(args.records);
    if (args.max_k)
        records.erase(std::remove_if(records.begin(), records.end(),
                                     [&](const RunRecord& r) {
                                         return r.k > *args.max_k;
                                     }),
                      records.end());
    const auto table = records_to_table(records);
    if (table.rows() == 0)
        throw ConfigError("no Ok records in " + args.records);

    std::vector<std::string> warnings;
    const auto spec = adapt_paper_spec(table, &warnings);
    auto design = build_design(table, spec);
    for (const auto& warning : design.warnings) warnings.push_back(warning);
    const auto fit = fit_ols(design);

    const auto clock = clock_for(config);
    const fs::path run_dir = make_run_dir(config, "stats", args.out_dir, *clock);
    write_config_snapshot(config, run_dir);

    std::string text = fit_to_text(fit);
    for (const auto& warning : warnings) text += "note: " + warning + "\n";

    nlohmann::json fit_json = fit_to_json(fit);
    fit_json["warnings"] = warnings;
    fit_json["records"] = args.records;
    write_text_file((run_dir / "fit.json").string(), fit_json.dump(2) + "\n");
    write_text_file((run_dir / "fit.txt").string(), text);

    std::cout << text;
    return 0;
}

// --------------------------------------------------------------- report ---

struct ReportArgs {
    std::string records;
    std::string out_dir;
};

int cmd_report(const ReportArgs& args) {
    if (args.records.empty()) throw ConfigError("--records is required");
    const auto records = load_run_records(args.records);
    if (records.empty()) throw ConfigError("no records in " + args.records);

    const std::string text = grid_table_text(records);
    int ok = 0, overflow = 0, failed = 0;
    for (const auto& record : records) {
        if (record.status == RunStatus::Ok) ++ok;
        if (record.status == RunStatus::ContextOverflow) ++overflow;
        if (record.status == RunStatus::Failed) ++failed;
    }
    std::cout << text;
    std::cout << "cells: " << ok << " ok, " << overflow << " context_overflow, "
              << failed << " failed\n";

    if (!args.out_dir.empty()) {
        fs::create_directories(args.out_dir);
        write_text_file((fs::path(args.out_dir) / "summary.txt").string(), text);
        write_text_file((fs::path(args.out_dir) / "summary.csv").string(),
                        grid_table_csv(records));
        std::cout << "wrote " << args.out_dir << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Suicide-risk transcript classification harness"};
    app.require_subcommand(1);

    std::function<int()> action;

    SplitArgs split_args;
    auto* split_cmd =
        app.add_subcommand("split", "Stratified train/dev/test assignment");
    split_cmd->add_option("--config", split_args.config_path, "Config file");
    split_cmd->add_option("--corpus", split_args.corpus, "Corpus file");
    split_cmd->add_option("--format", split_args.format, "jsonl or csv");
    split_cmd->add_option("--out", split_args.out, "Output corpus path");
    split_cmd->add_option("--out-dir", split_args.out_dir, "Run directory");
    split_cmd->add_option("--fractions", split_args.fractions,
                          "Train dev test fractions (3 values)");
    split_cmd->add_option("--strata", split_args.strata,
                          "Stratum keys: label, sex, age_band");
    split_cmd->add_option("--seed", split_args.seed, "Shuffle seed");
    split_cmd->callback([&] { action = [&] { return cmd_split(split_args); }; });

    ClassifyArgs classify_args;
    auto* classify_cmd =
        app.add_subcommand("classify", "One classification run over a split");
    classify_cmd->add_option("--config", classify_args.config_path, "Config file");
    classify_cmd->add_option("--corpus", classify_args.corpus, "Corpus file");
    classify_cmd->add_option("--format", classify_args.format, "jsonl or csv");
    classify_cmd->add_option("--out-dir", classify_args.out_dir, "Run directory");
    classify_cmd->add_option("--k", classify_args.k, "Demo count");
    classify_cmd->add_option("--mode", classify_args.mode,
                             "zero_shot, few_shot, or few_shot_cot");
    classify_cmd->add_option("--seed", classify_args.seed, "Demo sampling seed");
    classify_cmd->add_option("--balanced", classify_args.balanced,
                             "Balance demo labels (true/false)");
    classify_cmd->add_option("--fallback", classify_args.fallback,
                             "at_risk, no_risk, or error");
    classify_cmd->add_option("--split", classify_args.split,
                             "Split to classify (default dev)");
    classify_cmd->add_option("--model", classify_args.model, "Model name");
    classify_cmd->add_option("--workers", classify_args.workers,
                             "Concurrent backend calls");
    classify_cmd->callback(
        [&] { action = [&] { return cmd_classify(classify_args); }; });

    AblateArgs ablate_args;
    auto* ablate_cmd =
        app.add_subcommand("ablate", "Shot-count x model x seed grid");
    ablate_cmd->add_option("--config", ablate_args.config_path, "Config file");
    ablate_cmd->add_option("--corpus", ablate_args.corpus, "Corpus file");
    ablate_cmd->add_option("--format", ablate_args.format, "jsonl or csv");
    ablate_cmd->add_option("--out-dir", ablate_args.out_dir, "Run directory");
    ablate_cmd->add_option("--records", ablate_args.records,
                           "Run-record JSONL path (enables resuming)");
    ablate_cmd->add_flag("--force", ablate_args.force,
                         "Re-run cells that already have records");
    ablate_cmd->add_option("--workers", ablate_args.workers, "Concurrent cells");
    ablate_cmd->callback([&] { action = [&] { return cmd_ablate(ablate_args); }; });

    BaselineArgs baseline_args;
    auto* baseline_cmd = app.add_subcommand(
        "baseline", "Pooled-embedding logistic-regression baseline");
    baseline_cmd->add_option("--config", baseline_args.config_path, "Config file");
    baseline_cmd->add_option("--corpus", baseline_args.corpus, "Corpus file");
    baseline_cmd->add_option("--format", baseline_args.format, "jsonl or csv");
    baseline_cmd->add_option("--out-dir", baseline_args.out_dir, "Run directory");
    baseline_cmd->add_option("--embeddings", baseline_args.embeddings,
                             "Embedding JSONL path");
    baseline_cmd->add_option("--poolings", baseline_args.poolings,
                             "Pooling specs, e.g. mean max mellowmax:1.0");
    baseline_cmd->add_option("--threshold", baseline_args.threshold,
                             "Decision threshold");
    baseline_cmd->add_option("--split", baseline_args.split,
                             "Evaluation split (default dev)");
    baseline_cmd->callback(
        [&] { action = [&] { return cmd_baseline(baseline_args); }; });

    StatsArgs stats_args;
    auto* stats_cmd = app.add_subcommand(
        "stats", "Interaction regression over grid run records");
    stats_cmd->add_option("--config", stats_args.config_path, "Config file");
    stats_cmd->add_option("--records", stats_args.records,
                          "Run-record JSONL path");
    stats_cmd->add_option("--out-dir", stats_args.out_dir, "Run directory");
    stats_cmd->add_option("--max-k", stats_args.max_k,
                          "Ignore records with more shots than this");
    stats_cmd->callback([&] { action = [&] { return cmd_stats(stats_args); }; });

    ReportArgs report_args;
    auto* report_cmd =
        app.add_subcommand("report", "Re-render tables from run records");
    report_cmd->add_option("--records", report_args.records,
                           "Run-record JSONL path");
    report_cmd->add_option("--out-dir", report_args.out_dir,
                           "Where to write summary files");
    report_cmd->callback([&] { action = [&] { return cmd_report(report_args); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return action ? action() : 2;
    } catch (const TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ApiError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ContextOverflow& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Unparseable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
