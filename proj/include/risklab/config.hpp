#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "risklab/ablation.hpp"
#include "risklab/backend.hpp"
#include "risklab/corpus.hpp"
#include "risklab/embeddings.hpp"
#include "risklab/parser.hpp"
#include "risklab/prompt.hpp"

namespace risklab {

struct ConfigError : Error {
    using Error::Error;
};

struct MockSection {
    std::string default_completion = "[[ ## answer ## ]]\nno";
    std::vector<MockRule> rules;
    std::size_t context_limit_chars = 0;  // 0: unlimited
};

struct BackendSection {
    std::string kind = "mock";  // "mock" | "http"
    BackendConfig http;         // api_key only ever arrives via environment
    MockSection mock;
};

struct RunSection {
    PromptMode mode = PromptMode::FewShot;
    int k = 4;
    std::uint64_t demo_seed = 0;
    bool balanced = true;
    FallbackPolicy fallback = FallbackPolicy::AtRisk;
    Split split = Split::Dev;
};

struct BaselineSection {
    std::string embeddings_path;
    std::vector<std::string> poolings{"mean", "max", "mellowmax:1.0"};
    std::vector<TaskTag> tasks{TaskTag::Task1, TaskTag::Task2};
    double threshold = 0.5;
    double l2_lambda = 1e-3;
    int max_iters = 500;
    double tol = 1e-8;
};

struct SplitSection {
    SplitFractions fractions{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0};
    std::vector<StratumKey> strata{StratumKey::Label};
    std::uint64_t seed = 0;
};

struct RunConfig {
    std::string corpus_path;
    std::optional<CorpusFormat> corpus_format;  // unset: inferred from path
    BackendSection backend;
    RunSection run;
    BaselineSection baseline;
    GridSpec grid;
    SplitSection split;
    std::string output_dir = "runs";
    int workers = 4;
};

/// Strict parse: unknown keys are config errors.
RunConfig config_from_json(const nlohmann::json& json);

/// Reads the file, parses, then overlays RISKLAB_API_KEY from the
/// environment — the key never lives in the file.
RunConfig load_config(const std::string& path);

/// Snapshot for run directories. Carries everything except the API key.
nlohmann::json config_to_redacted_json(const RunConfig& config);

CorpusFormat corpus_format_for(const RunConfig& config);

/// Builds the configured backend; model_name overrides the config's when
/// nonempty (grid cells bind their own model).
std::unique_ptr<Backend> make_backend(const BackendSection& section,
                                      const std::string& model_name = "",
                                      std::shared_ptr<Sleeper> sleeper = nullptr);

}  // namespace risklab
