#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "risklab/backend.hpp"

using namespace risklab;

namespace {

PromptBundle make_bundle(std::vector<Message> messages) {
    PromptBundle bundle;
    bundle.messages = std::move(messages);
    return bundle;
}

PromptBundle simple_bundle(const std::string& user_text) {
    return make_bundle({{Role::System, "You are a careful rater."},
                        {Role::User, user_text}});
}

std::string chat_reply(const std::string& content,
                       const std::string& finish = "stop") {
    nlohmann::json message = {{"role", "assistant"}, {"content", content}};
    nlohmann::json choice = {{"message", message}, {"finish_reason", finish}};
    nlohmann::json body;
    body["choices"] = nlohmann::json::array({choice});
    return body.dump();
}

// Owns an httplib server on a random loopback port for one test's lifetime.
class TestServer {
public:
    TestServer(const std::string& path, httplib::Server::Handler handler) {
        server_.Post(path, std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~TestServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    std::string base_url() const {
        return "http://127.0.0.1:" + std::to_string(port_);
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

BackendConfig http_config(const std::string& base_url) {
    BackendConfig config;
    config.base_url = base_url;
    config.model_name = "test-model";
    config.retry_backoff_s = 0.25;
    return config;
}

}  // namespace

TEST_CASE("request body carries the chat fields and never the api key") {
    BackendConfig config;
    config.model_name = "m1";
    config.temperature = 0.25;
    config.max_output_tokens = 64;
    config.api_key = "sk-secret-123";
    config.request_seed = 7;

    const auto bundle = simple_bundle("hello");
    const auto body = build_request_body(config, bundle);
    CHECK(body["model"] == "m1");
    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "hello");
    CHECK(body["temperature"] == 0.25);
    CHECK(body["max_tokens"] == 64);
    CHECK(body["seed"] == 7);

    const std::string dump = body.dump();
    CHECK(dump.find("sk-secret-123") == std::string::npos);
    CHECK(dump.find("api_key") == std::string::npos);

    // Identical inputs serialize to identical bytes.
    CHECK(build_request_body(config, bundle).dump() == dump);

    config.request_seed.reset();
    CHECK_FALSE(build_request_body(config, bundle).contains("seed"));
}

TEST_CASE("finish reason tokens") {
    CHECK(to_token(FinishReason::Stop) == "stop");
    CHECK(to_token(FinishReason::Length) == "length");
    CHECK(to_token(FinishReason::ErrorReply) == "error");
}

TEST_CASE("mock backend matches rules against the final user message only") {
    BackendConfig config;
    config.model_name = "mock";
    const std::vector<MockRule> rules = {
        {"grey fog", "[[ ## answer ## ]]\nyes"},
        {"fog", "[[ ## answer ## ]]\nat risk"},  // never reached: first wins
    };
    MockBackend backend(config, rules, "[[ ## answer ## ]]\nno");

    auto hit = backend.complete(simple_bundle("a grey fog hangs around"));
    CHECK(hit.response_text == "[[ ## answer ## ]]\nyes");
    CHECK(hit.attempt_count == 1);
    CHECK(hit.latency_ms == 0);
    CHECK(hit.finish_reason == FinishReason::Stop);

    // The rule text appearing in an earlier message must not trigger it.
    auto earlier = make_bundle({{Role::System, "context mentions grey fog"},
                                {Role::User, "demo says grey fog too"},
                                {Role::Assistant, "[[ ## answer ## ]]\nyes"},
                                {Role::User, "sunny day transcript"}});
    CHECK(backend.complete(earlier).response_text == "[[ ## answer ## ]]\nno");

    const auto log = backend.exchanges();
    REQUIRE(log.size() == 2);
    CHECK(log[0].response_text == "[[ ## answer ## ]]\nyes");
    CHECK(log[1].response_text == "[[ ## answer ## ]]\nno");
    const auto expected =
        build_request_body(config, simple_bundle("a grey fog hangs around"));
    CHECK(log[0].request_body == expected);
}

TEST_CASE("mock backend context limit counts every message") {
    BackendConfig config;
    config.model_name = "mock";
    MockBackend backend(config, {}, "no", /*context_limit_chars=*/11);

    // 5 + 6 = 11 chars: exactly at the limit is still allowed.
    CHECK_NOTHROW(backend.complete(
        make_bundle({{Role::System, "12345"}, {Role::User, "123456"}})));

    // One char over trips the overflow, and the failure is not logged.
    CHECK_THROWS_AS(backend.complete(make_bundle({{Role::System, "12345"},
                                                  {Role::User, "1234567"}})),
                    ContextOverflow);
    CHECK(backend.exchanges().size() == 1);
}

TEST_CASE("mock backend log is safe under concurrent completions") {
    BackendConfig config;
    config.model_name = "mock";
    MockBackend backend(config, {}, "no");
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&backend] {
            for (int i = 0; i < 25; ++i) backend.complete(simple_bundle("x"));
        });
    for (auto& thread : threads) thread.join();
    CHECK(backend.exchanges().size() == 200);
}

TEST_CASE("http backend happy path sends auth header but keeps it out of records") {
    std::mutex mu;
    std::string seen_auth;
    std::string seen_body;
    TestServer server("/v1/chat/completions",
                      [&](const httplib::Request& req, httplib::Response& res) {
                          std::lock_guard<std::mutex> lock(mu);
                          seen_auth = req.get_header_value("Authorization");
                          seen_body = req.body;
                          res.set_content(chat_reply("[[ ## answer ## ]]\nyes"),
                                          "application/json");
                      });

    auto config = http_config(server.base_url());
    config.api_key = "sk-test";
    auto sleeper = std::make_shared<RecordingSleeper>();
    HttpBackend backend(config, sleeper);

    const auto bundle = simple_bundle("transcript goes here");
    const auto exchange = backend.complete(bundle);
    CHECK(exchange.response_text == "[[ ## answer ## ]]\nyes");
    CHECK(exchange.finish_reason == FinishReason::Stop);
    CHECK(exchange.attempt_count == 1);
    CHECK(sleeper->waits.empty());

    std::lock_guard<std::mutex> lock(mu);
    CHECK(seen_auth == "Bearer sk-test");
    CHECK(seen_body == build_request_body(config, bundle).dump());
    CHECK(seen_body.find("sk-test") == std::string::npos);
    CHECK(exchange.request_body.dump().find("sk-test") == std::string::npos);
}

TEST_CASE("http backend omits the auth header without a key") {
    std::atomic<bool> had_auth{true};
    TestServer server("/v1/chat/completions",
                      [&](const httplib::Request& req, httplib::Response& res) {
                          had_auth = req.has_header("Authorization");
                          res.set_content(chat_reply("ok"), "application/json");
                      });
    HttpBackend backend(http_config(server.base_url()));
    backend.complete(simple_bundle("x"));
    CHECK_FALSE(had_auth.load());
}

TEST_CASE("http backend retries server errors with exponential backoff") {
    std::atomic<int> calls{0};
    TestServer server("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          if (++calls <= 2) {
                              res.status = 500;
                              res.set_content("upstream exploded", "text/plain");
                          } else {
                              res.set_content(chat_reply("ok"), "application/json");
                          }
                      });

    auto sleeper = std::make_shared<RecordingSleeper>();
    HttpBackend backend(http_config(server.base_url()), sleeper);
    const auto exchange = backend.complete(simple_bundle("x"));
    CHECK(exchange.attempt_count == 3);
    CHECK(exchange.response_text == "ok");
    REQUIRE(sleeper->waits.size() == 2);
    CHECK(sleeper->waits[0] == doctest::Approx(0.25));
    CHECK(sleeper->waits[1] == doctest::Approx(0.5));
}

TEST_CASE("http backend gives up on persistent server errors") {
    std::atomic<int> calls{0};
    TestServer server("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          ++calls;
                          res.status = 500;
                          res.set_content("boom", "text/plain");
                      });

    auto config = http_config(server.base_url());
    config.max_retries = 2;
    auto sleeper = std::make_shared<RecordingSleeper>();
    HttpBackend backend(config, sleeper);
    try {
        backend.complete(simple_bundle("x"));
        FAIL("expected ApiError");
    } catch (const ApiError& e) {
        CHECK(e.status == 500);
        CHECK(e.excerpt == "boom");
    }
    CHECK(calls == 3);
    REQUIRE(sleeper->waits.size() == 2);
    CHECK(sleeper->waits[0] == doctest::Approx(0.25));
    CHECK(sleeper->waits[1] == doctest::Approx(0.5));
}

TEST_CASE("http backend retries 429 rate limits") {
    std::atomic<int> calls{0};
    TestServer server("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          if (++calls == 1) {
                              res.status = 429;
                              res.set_content("slow down", "text/plain");
                          } else {
                              res.set_content(chat_reply("done"), "application/json");
                          }
                      });
    auto sleeper = std::make_shared<RecordingSleeper>();
    HttpBackend backend(http_config(server.base_url()), sleeper);
    const auto exchange = backend.complete(simple_bundle("x"));
    CHECK(exchange.attempt_count == 2);
    REQUIRE(sleeper->waits.size() == 1);
    CHECK(sleeper->waits[0] == doctest::Approx(0.25));
}

TEST_CASE("http backend raises non-retryable statuses immediately") {
    std::atomic<int> calls{0};
    TestServer server("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          ++calls;
                          res.status = 404;
                          res.set_content("not found", "text/plain");
                      });
    auto sleeper = std::make_shared<RecordingSleeper>();
    HttpBackend backend(http_config(server.base_url()), sleeper);
    try {
        backend.complete(simple_bundle("x"));
        FAIL("expected ApiError");
    } catch (const ApiError& e) {
        CHECK(e.status == 404);
        CHECK(e.excerpt == "not found");
    }
    CHECK(calls == 1);
    CHECK(sleeper->waits.empty());
}

TEST_CASE("http backend recognizes context overflow replies") {
    TestServer server(
        "/v1/chat/completions",
        [&](const httplib::Request&, httplib::Response& res) {
            res.status = 400;
            res.set_content(
                R"({"error": {"message": "This model's maximum context length is 128 tokens"}})",
                "application/json");
        });
    auto sleeper = std::make_shared<RecordingSleeper>();
    HttpBackend backend(http_config(server.base_url()), sleeper);
    CHECK_THROWS_AS(backend.complete(simple_bundle("very long prompt")),
                    ContextOverflow);
    CHECK(sleeper->waits.empty());

    TestServer coded("/v1/chat/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                         res.status = 400;
                         res.set_content(
                             R"({"error": {"code": "context_length_exceeded"}})",
                             "application/json");
                     });
    HttpBackend backend2(http_config(coded.base_url()), sleeper);
    CHECK_THROWS_AS(backend2.complete(simple_bundle("x")), ContextOverflow);
}

TEST_CASE("http backend surfaces transport failures after retries") {
    // Nothing listens on the port once this server is gone.
    std::string dead_url;
    {
        TestServer server("/v1/chat/completions",
                          [](const httplib::Request&, httplib::Response& res) {
                              res.set_content("{}", "application/json");
                          });
        dead_url = server.base_url();
    }
    auto config = http_config(dead_url);
    config.max_retries = 1;
    config.request_timeout_s = 2.0;
    auto sleeper = std::make_shared<RecordingSleeper>();
    HttpBackend backend(config, sleeper);
    try {
        backend.complete(simple_bundle("x"));
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("2 attempts") != std::string::npos);
    }
    CHECK(sleeper->waits.size() == 1);
}

TEST_CASE("http backend maps finish reasons from the reply") {
    std::atomic<int> calls{0};
    TestServer server("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          const int n = ++calls;
                          if (n == 1)
                              res.set_content(chat_reply("cut off", "length"),
                                              "application/json");
                          else
                              res.set_content(chat_reply("odd", "content_filter"),
                                              "application/json");
                      });
    HttpBackend backend(http_config(server.base_url()));
    CHECK(backend.complete(simple_bundle("a")).finish_reason ==
          FinishReason::Length);
    CHECK(backend.complete(simple_bundle("b")).finish_reason ==
          FinishReason::ErrorReply);
}

TEST_CASE("http backend honors a path prefix in the base url") {
    TestServer server("/proxy/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          res.set_content(chat_reply("routed"), "application/json");
                      });
    HttpBackend backend(http_config(server.base_url() + "/proxy/"));
    CHECK(backend.complete(simple_bundle("x")).response_text == "routed");
}

TEST_CASE("http backend rejects malformed success replies") {
    TestServer server("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          res.set_content("not json at all", "application/json");
                      });
    HttpBackend backend(http_config(server.base_url()));
    CHECK_THROWS_AS(backend.complete(simple_bundle("x")), ApiError);

    TestServer empty("/v1/chat/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                         res.set_content(R"({"choices": []})", "application/json");
                     });
    HttpBackend backend2(http_config(empty.base_url()));
    CHECK_THROWS_AS(backend2.complete(simple_bundle("x")), ApiError);
}

TEST_CASE("base url must carry a scheme") {
    BackendConfig config;
    config.base_url = "localhost:8080";
    CHECK_THROWS_AS(HttpBackend{config}, Error);
}
