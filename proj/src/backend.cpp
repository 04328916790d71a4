#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "risklab/backend.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>

namespace risklab {

std::string to_token(FinishReason reason) {
    switch (reason) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::ErrorReply: return "error";
    }
    throw Error("invalid finish reason");
}

ApiError::ApiError(int status_code, const std::string& body_excerpt)
    : Error("backend returned HTTP " + std::to_string(status_code) + ": " +
            body_excerpt),
      status(status_code),
      excerpt(body_excerpt) {}

void RealSleeper::sleep_for_seconds(double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

nlohmann::json build_request_body(const BackendConfig& config,
                                  const PromptBundle& bundle) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& message : bundle.messages)
        messages.push_back(
            {{"role", to_token(message.role)}, {"content", message.content}});
    nlohmann::json body = {{"model", config.model_name},
                           {"messages", std::move(messages)},
                           {"temperature", config.temperature},
                           {"max_tokens", config.max_output_tokens}};
    if (config.request_seed) body["seed"] = *config.request_seed;
    return body;
}

namespace {

std::string excerpt_of(const std::string& body) {
    constexpr std::size_t kMax = 200;
    if (body.size() <= kMax) return body;
    return body.substr(0, kMax) + "...";
}

bool looks_like_context_overflow(const std::string& body) {
    const std::string lowered = lower_ascii(body);
    return contains(lowered, "context_length_exceeded") ||
           contains(lowered, "maximum context length");
}

FinishReason finish_reason_from(const std::string& token) {
    if (token == "length") return FinishReason::Length;
    if (token == "stop" || token.empty()) return FinishReason::Stop;
    return FinishReason::ErrorReply;
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config, std::shared_ptr<Sleeper> sleeper)
    : config_(std::move(config)),
      sleeper_(sleeper ? std::move(sleeper) : std::make_shared<RealSleeper>()) {
    const auto& url = config_.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error("base_url must start with http:// or https://");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_ = url;
    } else {
        scheme_host_ = url.substr(0, path_start);
        path_prefix_ = url.substr(path_start);
    }
    while (!path_prefix_.empty() && path_prefix_.back() == '/')
        path_prefix_.pop_back();
}

ChatExchange HttpBackend::complete(const PromptBundle& bundle) {
    const nlohmann::json body_json = build_request_body(config_, bundle);
    const std::string body = body_json.dump();
    const std::string path = path_prefix_ + "/v1/chat/completions";

    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto started = std::chrono::steady_clock::now();
    const int max_attempts = config_.max_retries + 1;
    std::string last_failure = "no attempt made";
    int last_status = 0;
    std::string last_body;

    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        httplib::Client client(scheme_host_);
        const auto timeout =
            std::chrono::duration<double>(config_.request_timeout_s);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto res = client.Post(path, headers, body, "application/json");
        if (res) {
            if (res->status == 200) {
                nlohmann::json reply;
                try {
                    reply = nlohmann::json::parse(res->body);
                } catch (const nlohmann::json::exception&) {
                    throw ApiError(200, "unparseable response body: " +
                                            excerpt_of(res->body));
                }
                if (!reply.contains("choices") || reply["choices"].empty())
                    throw ApiError(200,
                                   "response has no choices: " + excerpt_of(res->body));
                const auto& choice = reply["choices"][0];
                ChatExchange exchange;
                exchange.request_body = body_json;
                exchange.response_text =
                    choice.contains("message")
                        ? choice["message"].value("content", std::string())
                        : std::string();
                exchange.finish_reason = finish_reason_from(
                    choice.value("finish_reason", std::string()));
                exchange.attempt_count = attempt;
                exchange.latency_ms =
                    std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - started)
                        .count();
                return exchange;
            }
            if (res->status == 429 || res->status >= 500) {
                last_status = res->status;
                last_body = res->body;
                last_failure = "HTTP " + std::to_string(res->status);
            } else {
                if (looks_like_context_overflow(res->body))
                    throw ContextOverflow("prompt exceeds model context: " +
                                          excerpt_of(res->body));
                throw ApiError(res->status, excerpt_of(res->body));
            }
        } else {
            last_status = 0;
            last_failure = "transport failure (" +
                           std::string(httplib::to_string(res.error())) + ")";
        }
        if (attempt < max_attempts)
            sleeper_->sleep_for_seconds(config_.retry_backoff_s *
                                        std::pow(2.0, attempt - 1));
    }
    if (last_status != 0) throw ApiError(last_status, excerpt_of(last_body));
    throw TransportError("request failed after " + std::to_string(max_attempts) +
                         " attempts: " + last_failure);
}

MockBackend::MockBackend(BackendConfig config, std::vector<MockRule> rules,
                         std::string default_completion,
                         std::size_t context_limit_chars)
    : config_(std::move(config)),
      rules_(std::move(rules)),
      default_completion_(std::move(default_completion)),
      context_limit_chars_(context_limit_chars) {}

ChatExchange MockBackend::complete(const PromptBundle& bundle) {
    if (bundle.messages.empty()) throw Error("empty prompt bundle");

    if (context_limit_chars_ > 0) {
        std::size_t total = 0;
        for (const auto& message : bundle.messages) total += message.content.size();
        if (total > context_limit_chars_)
            throw ContextOverflow("prompt of " + std::to_string(total) +
                                  " chars exceeds mock context limit of " +
                                  std::to_string(context_limit_chars_));
    }

    const std::string& target = bundle.messages.back().content;
    const std::string* completion = &default_completion_;
    for (const auto& rule : rules_) {
        if (contains(target, rule.contains)) {
            completion = &rule.completion;
            break;
        }
    }

    ChatExchange exchange;
    exchange.request_body = build_request_body(config_, bundle);
    exchange.response_text = *completion;
    exchange.latency_ms = 0;
    exchange.attempt_count = 1;
    exchange.finish_reason = FinishReason::Stop;

    std::lock_guard<std::mutex> lock(mu_);
    log_.push_back(exchange);
    return exchange;
}

std::vector<ChatExchange> MockBackend::exchanges() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_;
}

}  // namespace risklab
