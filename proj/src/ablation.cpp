#include "risklab/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "risklab/evalkit.hpp"

namespace risklab {

std::string to_token(RunStatus status) {
    switch (status) {
        case RunStatus::Ok: return "ok";
        case RunStatus::ContextOverflow: return "context_overflow";
        case RunStatus::Failed: return "failed";
    }
    throw Error("invalid run status");
}

RunStatus run_status_from_token(const std::string& token) {
    if (token == "ok") return RunStatus::Ok;
    if (token == "context_overflow") return RunStatus::ContextOverflow;
    if (token == "failed") return RunStatus::Failed;
    throw Error("unknown run status '" + token + "'");
}

nlohmann::json run_record_to_json(const RunRecord& record) {
    nlohmann::json json = {{"k", record.k},
                           {"model_name", record.model_name},
                           {"model_type", record.model_type},
                           {"model_size_b", record.model_size_b},
                           {"seed", record.seed},
                           {"status", to_token(record.status)},
                           {"started", record.started},
                           {"finished", record.finished},
                           {"demo_ids", record.demo_ids}};
    if (record.accuracy) json["accuracy"] = *record.accuracy;
    if (record.f1) json["f1"] = *record.f1;
    if (record.error) json["error"] = *record.error;
    return json;
}

RunRecord run_record_from_json(const nlohmann::json& json) {
    RunRecord record;
    record.k = json.at("k").get<int>();
    record.model_name = json.at("model_name").get<std::string>();
    record.model_type = json.at("model_type").get<std::string>();
    record.model_size_b = json.at("model_size_b").get<double>();
    record.seed = json.at("seed").get<std::uint64_t>();
    record.status = run_status_from_token(json.at("status").get<std::string>());
    record.started = json.at("started").get<std::string>();
    record.finished = json.at("finished").get<std::string>();
    record.demo_ids = json.at("demo_ids").get<std::vector<std::string>>();
    if (json.contains("accuracy")) record.accuracy = json["accuracy"].get<double>();
    if (json.contains("f1")) record.f1 = json["f1"].get<double>();
    if (json.contains("error")) record.error = json["error"].get<std::string>();
    if (record.status != RunStatus::Ok && (record.accuracy || record.f1))
        throw Error("run record carries metrics despite status " +
                    to_token(record.status));
    return record;
}

std::vector<RunRecord> load_run_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open run records file: " + path);
    std::vector<RunRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            records.push_back(run_record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw Error(path + ":" + std::to_string(line_no) +
                        ": bad run record: " + e.what());
        }
    }
    return records;
}

namespace {

struct Cell {
    std::size_t index;  // position in the returned grid
    int k;
    ModelSpec model;
    std::uint64_t seed;
};

std::string cell_key(int k, const std::string& model_name, std::uint64_t seed) {
    return std::to_string(k) + "\x1f" + model_name + "\x1f" +
           std::to_string(seed);
}

RunRecord run_cell(const Cell& cell, const Corpus& corpus, const GridSpec& spec,
                   const BackendFactory& factory, const GridOptions& options,
                   Clock& clock) {
    RunRecord record;
    record.k = cell.k;
    record.model_name = cell.model.model_name;
    record.model_type = cell.model.model_type;
    record.model_size_b = cell.model.model_size_b;
    record.seed = cell.seed;
    record.started = iso8601_utc(clock.now_ms());
    try {
        const auto demos =
            sample_demos(corpus, cell.k, cell.seed, spec.balanced_demos);
        for (const auto& demo : demos)
            record.demo_ids.push_back(demo.subject.subject_id);
        const PromptMode mode =
            cell.k == 0 ? PromptMode::ZeroShot : spec.mode;

        const auto backend = factory(cell.model);
        if (!backend) throw Error("backend factory returned null");

        std::vector<PredictionRecord> predictions;
        for (const auto& subject : corpus.subjects()) {
            if (subject.split != Split::Dev) continue;
            const auto bundle = render_prompt(subject, demos, mode, cell.seed);
            const auto exchange = backend->complete(bundle);
            auto prediction = parse_completion(subject.subject_id,
                                               exchange.response_text, mode,
                                               options.fallback);
            prediction.exchange_meta = {exchange.latency_ms,
                                        exchange.attempt_count};
            predictions.push_back(std::move(prediction));
        }

        RunMeta meta{to_token(mode), cell.k, cell.seed, cell.model.model_name};
        const auto report = evaluate(predictions, corpus, Split::Dev, meta);
        record.status = RunStatus::Ok;
        record.accuracy = report.accuracy;
        record.f1 = report.f1;
    } catch (const ContextOverflow& e) {
        record.status = RunStatus::ContextOverflow;
        record.error = e.what();
    } catch (const std::exception& e) {
        record.status = RunStatus::Failed;
        record.error = e.what();
    }
    record.finished = iso8601_utc(clock.now_ms());
    return record;
}

}  // namespace

std::vector<RunRecord> run_grid(const GridSpec& spec, const Corpus& corpus,
                                const BackendFactory& factory,
                                const GridOptions& options) {
    if (spec.shot_counts.empty() || spec.models.empty() || spec.seeds.empty())
        throw Error("grid needs at least one shot count, model, and seed");
    for (int k : spec.shot_counts)
        if (k < 0) throw Error("negative shot count in grid");
    if (spec.mode == PromptMode::ZeroShot)
        for (int k : spec.shot_counts)
            if (k > 0)
                throw Error(
                    "zero-shot grid mode is incompatible with nonzero shot "
                    "counts");
    if (corpus.split_size(Split::Train) == 0 ||
        corpus.split_size(Split::Dev) == 0)
        throw Error("grid corpus needs nonempty Train and Dev splits");
    if (options.workers < 1) throw Error("worker count must be >= 1");

    const auto clock =
        options.clock ? options.clock : std::make_shared<SystemClock>();

    // Records already on disk satisfy their cells unless forced.
    std::map<std::string, RunRecord> existing;
    if (!options.records_path.empty() && !options.force &&
        std::filesystem::exists(options.records_path)) {
        for (auto& record : load_run_records(options.records_path))
            existing[cell_key(record.k, record.model_name, record.seed)] =
                std::move(record);
    }

    std::vector<RunRecord> grid;
    std::vector<Cell> todo;
    for (const auto& model : spec.models) {
        for (int k : spec.shot_counts) {
            for (std::uint64_t seed : spec.seeds) {
                const auto hit = existing.find(cell_key(k, model.model_name, seed));
                if (hit != existing.end()) {
                    grid.push_back(hit->second);
                } else {
                    todo.push_back({grid.size(), k, model, seed});
                    grid.emplace_back();
                }
            }
        }
    }

    std::ofstream out;
    if (!options.records_path.empty()) {
        out.open(options.records_path,
                 options.force ? std::ios::trunc : std::ios::app);
        if (!out)
            throw Error("cannot open run records file for writing: " +
                        options.records_path);
    }

    std::atomic<std::size_t> next{0};
    std::mutex write_mu;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) break;
            RunRecord record =
                run_cell(todo[i], corpus, spec, factory, options, *clock);
            std::lock_guard<std::mutex> lock(write_mu);
            if (out.is_open()) {
                out << run_record_to_json(record).dump() << "\n";
                out.flush();
            }
            grid[todo[i].index] = std::move(record);
        }
    };

    const std::size_t thread_count =
        std::min<std::size_t>(static_cast<std::size_t>(options.workers),
                              todo.size());
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < thread_count; ++i)
            threads.emplace_back(worker);
        for (auto& thread : threads) thread.join();
    }
    return grid;
}

namespace {

std::string format_cell(const CellSummary& cell) {
    if (cell.n_ok == 0) return "N/A";
    char buf[48];
    if (cell.sd_accuracy) {
        std::snprintf(buf, sizeof(buf), "%.2f (.%02ld)", *cell.mean_accuracy,
                      std::lround(*cell.sd_accuracy * 100.0));
    } else {
        std::snprintf(buf, sizeof(buf), "%.2f (—)", *cell.mean_accuracy);
    }
    return buf;
}

}  // namespace

std::vector<CellSummary> summarize_grid(const std::vector<RunRecord>& records) {
    // Key order mirrors first appearance so tables keep the grid's shape.
    std::vector<CellSummary> cells;
    auto find_cell = [&cells](int k, const std::string& model) -> CellSummary& {
        for (auto& cell : cells)
            if (cell.k == k && cell.model_name == model) return cell;
        cells.push_back({k, model, 0, 0, std::nullopt, std::nullopt, ""});
        return cells.back();
    };

    std::map<std::pair<std::string, int>, std::vector<double>> accuracies;
    for (const auto& record : records) {
        auto& cell = find_cell(record.k, record.model_name);
        ++cell.n_total;
        if (record.status == RunStatus::Ok && record.accuracy) {
            ++cell.n_ok;
            accuracies[{record.model_name, record.k}].push_back(*record.accuracy);
        }
    }

    for (auto& cell : cells) {
        const auto& values = accuracies[{cell.model_name, cell.k}];
        if (!values.empty()) {
            double sum = 0.0;
            for (double v : values) sum += v;
            const double mean = sum / static_cast<double>(values.size());
            cell.mean_accuracy = mean;
            if (values.size() >= 2) {
                double ss = 0.0;
                for (double v : values) ss += (v - mean) * (v - mean);
                cell.sd_accuracy =
                    std::sqrt(ss / static_cast<double>(values.size() - 1));
            }
        }
        cell.display = format_cell(cell);
    }
    return cells;
}

namespace {

struct GridLayout {
    std::vector<int> shot_counts;          // ascending
    std::vector<std::string> models;       // first appearance order
    std::map<std::pair<int, std::string>, std::string> display;
};

GridLayout layout_of(const std::vector<RunRecord>& records) {
    GridLayout layout;
    for (const auto& record : records) {
        if (std::find(layout.models.begin(), layout.models.end(),
                      record.model_name) == layout.models.end())
            layout.models.push_back(record.model_name);
        if (std::find(layout.shot_counts.begin(), layout.shot_counts.end(),
                      record.k) == layout.shot_counts.end())
            layout.shot_counts.push_back(record.k);
    }
    std::sort(layout.shot_counts.begin(), layout.shot_counts.end());
    for (const auto& cell : summarize_grid(records))
        layout.display[{cell.k, cell.model_name}] = cell.display;
    return layout;
}

}  // namespace

std::string grid_table_text(const std::vector<RunRecord>& records) {
    const auto layout = layout_of(records);
    std::vector<std::size_t> widths{1};  // "k"
    for (const auto& model : layout.models) widths.push_back(model.size());
    for (int k : layout.shot_counts) {
        widths[0] = std::max(widths[0], std::to_string(k).size());
        for (std::size_t j = 0; j < layout.models.size(); ++j) {
            const auto hit = layout.display.find({k, layout.models[j]});
            if (hit == layout.display.end()) continue;
            // Display width, not byte width: the em dash is 3 bytes but one
            // column.
            std::size_t width = hit->second.size();
            if (hit->second.find("—") != std::string::npos) width -= 2;
            widths[j + 1] = std::max(widths[j + 1], width);
        }
    }

    std::ostringstream out;
    auto pad = [&out](const std::string& text, std::size_t width,
                      std::size_t display_size) {
        out << text;
        for (std::size_t i = display_size; i < width; ++i) out << ' ';
    };
    pad("k", widths[0], 1);
    for (std::size_t j = 0; j < layout.models.size(); ++j) {
        out << "  ";
        pad(layout.models[j], widths[j + 1], layout.models[j].size());
    }
    out << "\n";
    for (int k : layout.shot_counts) {
        const std::string key = std::to_string(k);
        pad(key, widths[0], key.size());
        for (std::size_t j = 0; j < layout.models.size(); ++j) {
            const auto hit = layout.display.find({k, layout.models[j]});
            const std::string cell =
                hit == layout.display.end() ? "" : hit->second;
            std::size_t display_size = cell.size();
            if (cell.find("—") != std::string::npos) display_size -= 2;
            out << "  ";
            pad(cell, widths[j + 1], display_size);
        }
        out << "\n";
    }
    return out.str();
}

std::string grid_table_csv(const std::vector<RunRecord>& records) {
    const auto layout = layout_of(records);
    std::ostringstream out;
    out << "k";
    for (const auto& model : layout.models) out << "," << model;
    out << "\n";
    for (int k : layout.shot_counts) {
        out << k;
        for (const auto& model : layout.models) {
            const auto hit = layout.display.find({k, model});
            out << "," << (hit == layout.display.end() ? "" : hit->second);
        }
        out << "\n";
    }
    return out.str();
}

DataTable records_to_table(const std::vector<RunRecord>& records) {
    std::vector<double> accuracy;
    std::vector<double> example_count;
    std::vector<double> model_size;
    std::vector<std::string> model_type;
    for (const auto& record : records) {
        if (record.status != RunStatus::Ok || !record.accuracy) continue;
        accuracy.push_back(*record.accuracy);
        example_count.push_back(record.k);
        model_size.push_back(record.model_size_b);
        model_type.push_back(record.model_type);
    }
    DataTable table;
    table.add_numeric("accuracy", std::move(accuracy));
    table.add_numeric("example_count", std::move(example_count));
    table.add_numeric("model_size", std::move(model_size));
    table.add_string("model_type", std::move(model_type));
    return table;
}

}  // namespace risklab
