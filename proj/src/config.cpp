#include "risklab/config.hpp"

#include <cstdlib>
#include <set>

namespace risklab {

namespace {

void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
    if (!obj.is_object())
        throw ConfigError("config section '" + where + "' must be an object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

template <typename T>
void read_into(const nlohmann::json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("bad value for '") + key + "'");
    }
}

void parse_backend(const nlohmann::json& obj, BackendSection& section) {
    check_keys(obj,
               {"kind", "base_url", "model_name", "temperature",
                "max_output_tokens", "request_timeout_s", "max_retries",
                "retry_backoff_s", "request_seed", "mock"},
               "backend");
    read_into(obj, "kind", section.kind);
    if (section.kind != "mock" && section.kind != "http")
        throw ConfigError("backend.kind must be \"mock\" or \"http\"");
    read_into(obj, "base_url", section.http.base_url);
    read_into(obj, "model_name", section.http.model_name);
    read_into(obj, "temperature", section.http.temperature);
    read_into(obj, "max_output_tokens", section.http.max_output_tokens);
    read_into(obj, "request_timeout_s", section.http.request_timeout_s);
    read_into(obj, "max_retries", section.http.max_retries);
    read_into(obj, "retry_backoff_s", section.http.retry_backoff_s);
    if (obj.contains("request_seed"))
        section.http.request_seed = obj.at("request_seed").get<std::int64_t>();
    if (section.http.temperature < 0)
        throw ConfigError("backend.temperature must be >= 0");
    if (section.http.max_retries < 0)
        throw ConfigError("backend.max_retries must be >= 0");

    if (obj.contains("mock")) {
        const auto& mock = obj.at("mock");
        check_keys(mock, {"default_completion", "rules", "context_limit_chars"},
                   "backend.mock");
        read_into(mock, "default_completion", section.mock.default_completion);
        read_into(mock, "context_limit_chars", section.mock.context_limit_chars);
        if (mock.contains("rules")) {
            for (const auto& rule : mock.at("rules")) {
                check_keys(rule, {"contains", "completion"},
                           "backend.mock.rules[]");
                MockRule parsed;
                read_into(rule, "contains", parsed.contains);
                read_into(rule, "completion", parsed.completion);
                if (parsed.contains.empty())
                    throw ConfigError("mock rule needs a nonempty 'contains'");
                section.mock.rules.push_back(std::move(parsed));
            }
        }
    }
}

void parse_run(const nlohmann::json& obj, RunSection& section) {
    check_keys(obj, {"mode", "k", "demo_seed", "balanced", "fallback", "split"},
               "run");
    if (obj.contains("mode"))
        section.mode = prompt_mode_from_token(obj.at("mode").get<std::string>());
    read_into(obj, "k", section.k);
    read_into(obj, "demo_seed", section.demo_seed);
    read_into(obj, "balanced", section.balanced);
    if (obj.contains("fallback"))
        section.fallback =
            fallback_policy_from_token(obj.at("fallback").get<std::string>());
    if (obj.contains("split")) {
        const auto split = split_from_token(obj.at("split").get<std::string>());
        if (!split || *split == Split::Unassigned)
            throw ConfigError("run.split must be train, dev, or test");
        section.split = *split;
    }
    if (section.k < 0) throw ConfigError("run.k must be >= 0");
}

void parse_baseline(const nlohmann::json& obj, BaselineSection& section) {
    check_keys(obj,
               {"embeddings", "poolings", "tasks", "threshold", "l2_lambda",
                "max_iters", "tol"},
               "baseline");
    read_into(obj, "embeddings", section.embeddings_path);
    if (obj.contains("poolings")) {
        section.poolings = obj.at("poolings").get<std::vector<std::string>>();
        if (section.poolings.empty())
            throw ConfigError("baseline.poolings must not be empty");
        for (const auto& token : section.poolings)
            pooling_spec_from_token(token);  // validate early
    }
    if (obj.contains("tasks")) {
        section.tasks.clear();
        for (const auto& token : obj.at("tasks")) {
            const auto task = task_from_token(token.get<std::string>());
            if (!task)
                throw ConfigError("unknown task '" + token.get<std::string>() +
                                  "' in baseline.tasks");
            section.tasks.push_back(*task);
        }
        if (section.tasks.empty())
            throw ConfigError("baseline.tasks must not be empty");
    }
    read_into(obj, "threshold", section.threshold);
    read_into(obj, "l2_lambda", section.l2_lambda);
    read_into(obj, "max_iters", section.max_iters);
    read_into(obj, "tol", section.tol);
    if (section.threshold < 0.0 || section.threshold > 1.0)
        throw ConfigError("baseline.threshold must be in [0, 1]");
    if (section.l2_lambda < 0.0)
        throw ConfigError("baseline.l2_lambda must be >= 0");
}

void parse_grid(const nlohmann::json& obj, GridSpec& spec) {
    check_keys(obj, {"shot_counts", "models", "seeds", "mode", "balanced"},
               "grid");
    read_into(obj, "shot_counts", spec.shot_counts);
    if (obj.contains("models")) {
        for (const auto& model : obj.at("models")) {
            check_keys(model, {"name", "type", "size_b"}, "grid.models[]");
            ModelSpec parsed;
            read_into(model, "name", parsed.model_name);
            read_into(model, "type", parsed.model_type);
            read_into(model, "size_b", parsed.model_size_b);
            if (parsed.model_name.empty() || parsed.model_type.empty())
                throw ConfigError("grid model needs 'name' and 'type'");
            spec.models.push_back(std::move(parsed));
        }
    }
    read_into(obj, "seeds", spec.seeds);
    if (obj.contains("mode"))
        spec.mode = prompt_mode_from_token(obj.at("mode").get<std::string>());
    read_into(obj, "balanced", spec.balanced_demos);
}

void parse_split(const nlohmann::json& obj, SplitSection& section) {
    check_keys(obj, {"fractions", "strata", "seed"}, "split");
    if (obj.contains("fractions")) {
        const auto values = obj.at("fractions").get<std::vector<double>>();
        if (values.size() != 3)
            throw ConfigError("split.fractions needs exactly 3 values");
        section.fractions = {values[0], values[1], values[2]};
    }
    if (obj.contains("strata")) {
        section.strata.clear();
        for (const auto& token : obj.at("strata")) {
            const auto key = stratum_key_from_token(token.get<std::string>());
            if (!key)
                throw ConfigError("unknown stratum '" +
                                  token.get<std::string>() + "'");
            section.strata.push_back(*key);
        }
        if (section.strata.empty())
            throw ConfigError("split.strata must not be empty");
    }
    read_into(obj, "seed", section.seed);
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& json) {
    check_keys(json,
               {"corpus", "backend", "run", "baseline", "grid", "split",
                "output_dir", "workers"},
               "config");
    RunConfig config;
    if (json.contains("corpus")) {
        const auto& corpus = json.at("corpus");
        check_keys(corpus, {"path", "format"}, "corpus");
        read_into(corpus, "path", config.corpus_path);
        if (corpus.contains("format")) {
            const auto token = corpus.at("format").get<std::string>();
            if (token == "jsonl")
                config.corpus_format = CorpusFormat::Jsonl;
            else if (token == "csv")
                config.corpus_format = CorpusFormat::Csv;
            else
                throw ConfigError("corpus.format must be \"jsonl\" or \"csv\"");
        }
    }
    if (json.contains("backend")) parse_backend(json.at("backend"), config.backend);
    if (json.contains("run")) parse_run(json.at("run"), config.run);
    if (json.contains("baseline")) parse_baseline(json.at("baseline"), config.baseline);
    if (json.contains("grid")) parse_grid(json.at("grid"), config.grid);
    if (json.contains("split")) parse_split(json.at("split"), config.split);
    read_into(json, "output_dir", config.output_dir);
    read_into(json, "workers", config.workers);
    if (config.workers < 1) throw ConfigError("workers must be >= 1");
    return config;
}

RunConfig load_config(const std::string& path) {
    nlohmann::json json;
    try {
        json = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config " + path + ": " + e.what());
    }
    RunConfig config = config_from_json(json);
    if (const char* key = std::getenv("RISKLAB_API_KEY"))
        config.backend.http.api_key = key;
    return config;
}

nlohmann::json config_to_redacted_json(const RunConfig& config) {
    nlohmann::json mock_rules = nlohmann::json::array();
    for (const auto& rule : config.backend.mock.rules)
        mock_rules.push_back(
            {{"contains", rule.contains}, {"completion", rule.completion}});

    nlohmann::json models = nlohmann::json::array();
    for (const auto& model : config.grid.models)
        models.push_back({{"name", model.model_name},
                          {"type", model.model_type},
                          {"size_b", model.model_size_b}});

    std::vector<std::string> strata;
    for (const auto key : config.split.strata) {
        switch (key) {
            case StratumKey::Label: strata.push_back("label"); break;
            case StratumKey::Sex: strata.push_back("sex"); break;
            case StratumKey::AgeBand: strata.push_back("age_band"); break;
        }
    }

    std::vector<std::string> tasks;
    for (const auto task : config.baseline.tasks) tasks.push_back(to_token(task));

    nlohmann::json backend = {
        {"kind", config.backend.kind},
        {"base_url", config.backend.http.base_url},
        {"model_name", config.backend.http.model_name},
        {"temperature", config.backend.http.temperature},
        {"max_output_tokens", config.backend.http.max_output_tokens},
        {"request_timeout_s", config.backend.http.request_timeout_s},
        {"max_retries", config.backend.http.max_retries},
        {"retry_backoff_s", config.backend.http.retry_backoff_s},
        {"api_key_set", !config.backend.http.api_key.empty()},
        {"mock",
         {{"default_completion", config.backend.mock.default_completion},
          {"rules", mock_rules},
          {"context_limit_chars", config.backend.mock.context_limit_chars}}}};
    if (config.backend.http.request_seed)
        backend["request_seed"] = *config.backend.http.request_seed;

    nlohmann::json out = {
        {"corpus",
         {{"path", config.corpus_path},
          {"format", config.corpus_format
                         ? (*config.corpus_format == CorpusFormat::Csv ? "csv"
                                                                       : "jsonl")
                         : "auto"}}},
        {"backend", backend},
        {"run",
         {{"mode", to_token(config.run.mode)},
          {"k", config.run.k},
          {"demo_seed", config.run.demo_seed},
          {"balanced", config.run.balanced},
          {"fallback", to_token(config.run.fallback)},
          {"split", to_token(config.run.split)}}},
        {"baseline",
         {{"embeddings", config.baseline.embeddings_path},
          {"poolings", config.baseline.poolings},
          {"tasks", tasks},
          {"threshold", config.baseline.threshold},
          {"l2_lambda", config.baseline.l2_lambda},
          {"max_iters", config.baseline.max_iters},
          {"tol", config.baseline.tol}}},
        {"grid",
         {{"shot_counts", config.grid.shot_counts},
          {"models", models},
          {"seeds", config.grid.seeds},
          {"mode", to_token(config.grid.mode)},
          {"balanced", config.grid.balanced_demos}}},
        {"split",
         {{"fractions",
           {config.split.fractions.train, config.split.fractions.dev,
            config.split.fractions.test}},
          {"strata", strata},
          {"seed", config.split.seed}}},
        {"output_dir", config.output_dir},
        {"workers", config.workers}};
    return out;
}

CorpusFormat corpus_format_for(const RunConfig& config) {
    if (config.corpus_format) return *config.corpus_format;
    const auto& path = config.corpus_path;
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
        return CorpusFormat::Csv;
    return CorpusFormat::Jsonl;
}

std::unique_ptr<Backend> make_backend(const BackendSection& section,
                                      const std::string& model_name,
                                      std::shared_ptr<Sleeper> sleeper) {
    BackendConfig http = section.http;
    if (!model_name.empty()) http.model_name = model_name;
    if (section.kind == "mock") {
        return std::make_unique<MockBackend>(std::move(http),
                                             section.mock.rules,
                                             section.mock.default_completion,
                                             section.mock.context_limit_chars);
    }
    if (http.base_url.empty())
        throw ConfigError("http backend needs backend.base_url");
    return std::make_unique<HttpBackend>(std::move(http), std::move(sleeper));
}

}  // namespace risklab
