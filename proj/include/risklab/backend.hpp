#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "risklab/common.hpp"
#include "risklab/prompt.hpp"

namespace risklab {

struct BackendConfig {
    std::string base_url;
    std::string model_name;
    double temperature = 0.0;  // greedy decoding by default
    int max_output_tokens = 256;
    double request_timeout_s = 30.0;
    int max_retries = 3;
    double retry_backoff_s = 1.0;  // exponential base
    std::string api_key;           // header-only; never serialized or logged
    std::optional<std::int64_t> request_seed;
};

enum class FinishReason { Stop, Length, ErrorReply };

std::string to_token(FinishReason reason);  // "stop" / "length" / "error"

struct ChatExchange {
    nlohmann::json request_body;  // body as POSTed; carries no secrets
    std::string response_text;
    std::int64_t latency_ms = 0;
    int attempt_count = 1;  // <= max_retries + 1
    FinishReason finish_reason = FinishReason::Stop;
};

struct TransportError : Error {
    using Error::Error;
};

struct ApiError : Error {
    ApiError(int status_code, const std::string& body_excerpt);
    int status;
    std::string excerpt;
};

struct ContextOverflow : Error {
    using Error::Error;
};

/// Waiting strategy for retry backoff; tests substitute a recording
/// implementation so schedules can be asserted without real delays.
class Sleeper {
public:
    virtual ~Sleeper() = default;
    virtual void sleep_for_seconds(double seconds) = 0;
};

class RealSleeper : public Sleeper {
public:
    void sleep_for_seconds(double seconds) override;
};

class RecordingSleeper : public Sleeper {
public:
    void sleep_for_seconds(double seconds) override { waits.push_back(seconds); }
    std::vector<double> waits;
};

/// The exact chat-completions body for (config, bundle): `model`,
/// `messages`, `temperature`, `max_tokens`, optional `seed`. Byte-stable
/// for identical inputs.
nlohmann::json build_request_body(const BackendConfig& config,
                                  const PromptBundle& bundle);

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatExchange complete(const PromptBundle& bundle) = 0;
    virtual const BackendConfig& config() const = 0;
};

/// OpenAI-compatible chat-completions client. POSTs to
/// {base_url}/v1/chat/completions, retrying 429/5xx/timeouts with
/// exponential backoff (attempt i waits retry_backoff * 2^(i-1) seconds).
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config,
                         std::shared_ptr<Sleeper> sleeper = nullptr);
    ChatExchange complete(const PromptBundle& bundle) override;
    const BackendConfig& config() const override { return config_; }

private:
    BackendConfig config_;
    std::shared_ptr<Sleeper> sleeper_;
    std::string scheme_host_;  // e.g. "http://127.0.0.1:8080"
    std::string path_prefix_;  // e.g. "" or "/proxy"
};

struct MockRule {
    std::string contains;  // substring matched against the final user message
    std::string completion;
};

/// Deterministic in-process backend: first matching rule wins, otherwise the
/// default completion. A nonzero context limit makes oversized prompts fail
/// the same way a small-context model would.
class MockBackend : public Backend {
public:
    MockBackend(BackendConfig config, std::vector<MockRule> rules,
                std::string default_completion,
                std::size_t context_limit_chars = 0);
    ChatExchange complete(const PromptBundle& bundle) override;
    const BackendConfig& config() const override { return config_; }

    std::vector<ChatExchange> exchanges() const;

private:
    BackendConfig config_;
    std::vector<MockRule> rules_;
    std::string default_completion_;
    std::size_t context_limit_chars_;
    mutable std::mutex mu_;
    std::vector<ChatExchange> log_;
};

}  // namespace risklab
