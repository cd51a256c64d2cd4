#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include "zest/errors.hpp"
#include "zest/image.hpp"
#include "zest/llm_client.hpp"

using namespace zest;

namespace {

// In-process chat-completions stub; all tests run against loopback only.
class StubServer {
  public:
    using Handler = std::function<void(int request_index, httplib::Response&)>;

    explicit StubServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         int index = 0;
                         {
                             std::lock_guard<std::mutex> lock(mu_);
                             index = ++count_;
                             last_body_ = req.body;
                             auto it = req.headers.find("Authorization");
                             last_auth_ = it == req.headers.end() ? "" : it->second;
                         }
                         handler_(index, res);
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
    int count() {
        std::lock_guard<std::mutex> lock(mu_);
        return count_;
    }
    std::string last_body() {
        std::lock_guard<std::mutex> lock(mu_);
        return last_body_;
    }
    std::string last_auth() {
        std::lock_guard<std::mutex> lock(mu_);
        return last_auth_;
    }

  private:
    httplib::Server server_;
    Handler handler_;
    std::thread thread_;
    int port_ = 0;
    std::mutex mu_;
    int count_ = 0;
    std::string last_body_;
    std::string last_auth_;
};

void reply_with(httplib::Response& res, const std::string& content) {
    nlohmann::json envelope{{"choices", {{{"message", {{"content", content}}}}}}};
    res.set_content(envelope.dump(), "application/json");
}

OracleQuery sample_query(int n_regions) {
    OracleQuery q;
    q.annotated = Image(8, 6, 120, 140, 90);
    q.annotated.set(2, 3, 255, 255, 255);
    q.n_regions = n_regions;
    q.prompt = "rate each numbered region";
    return q;
}

LlmConfig stub_config(const StubServer& stub) {
    LlmConfig cfg;
    cfg.endpoint = stub.url();
    cfg.timeout_s = 5.0;
    cfg.max_retries = 0;
    cfg.backoff_base_s = 0.05;
    cfg.api_key_env = "ZEST_TEST_ORACLE_KEY";
    return cfg;
}

constexpr const char* kSecret = "sk-test-3f1bb7b0e9d1c2a4";

struct EnvKeyGuard {
    EnvKeyGuard() { setenv("ZEST_TEST_ORACLE_KEY", kSecret, 1); }
    ~EnvKeyGuard() { unsetenv("ZEST_TEST_ORACLE_KEY"); }
};

}  // namespace

TEST_CASE("default retry delays follow a 1s base doubling schedule") {
    LlmConfig cfg;
    CHECK(backoff_delay_s(cfg, 0) == 1.0);
    CHECK(backoff_delay_s(cfg, 1) == 2.0);
    CHECK(backoff_delay_s(cfg, 2) == 4.0);
}

TEST_CASE("stub round trip returns parsed values and positive latency") {
    StubServer stub([](int, httplib::Response& res) { reply_with(res, "Sure: [0.5, 0.5]"); });
    auto reply = llm_query(stub_config(stub), sample_query(2));
    REQUIRE(reply.values.size() == 2);
    CHECK(reply.values[0] == 0.5);
    CHECK(reply.values[1] == 0.5);
    CHECK(reply.latency > 0.0);
    CHECK(stub.count() == 1);
}

TEST_CASE("request body carries the documented chat-completions schema") {
    EnvKeyGuard key;
    StubServer stub([](int, httplib::Response& res) { reply_with(res, "[0.1]"); });
    LlmConfig cfg = stub_config(stub);
    cfg.model = "vision-model-x";
    OracleQuery query = sample_query(1);
    llm_query(cfg, query);

    nlohmann::json body = nlohmann::json::parse(stub.last_body());
    REQUIRE(body.is_object());
    CHECK(body.size() == 3);  // model, temperature, messages — nothing else
    CHECK(body["model"] == "vision-model-x");
    CHECK(body["temperature"] == 0);
    REQUIRE(body["messages"].is_array());
    REQUIRE(body["messages"].size() == 1);
    const auto& msg = body["messages"][0];
    CHECK(msg["role"] == "user");
    REQUIRE(msg["content"].is_array());
    REQUIRE(msg["content"].size() == 2);
    CHECK(msg["content"][0]["type"] == "text");
    CHECK(msg["content"][0]["text"] == query.prompt);
    CHECK(msg["content"][1]["type"] == "image_url");
    const std::string url = msg["content"][1]["image_url"]["url"].get<std::string>();
    const std::string prefix = "data:image/png;base64,";
    REQUIRE(url.rfind(prefix, 0) == 0);
    const auto png = encode_png(query.annotated);
    CHECK(url.substr(prefix.size()) == base64_encode(png.data(), png.size()));

    CHECK(stub.last_auth() == std::string("Bearer ") + kSecret);
}

TEST_CASE("transient server errors are retried until success") {
    StubServer stub([](int index, httplib::Response& res) {
        if (index <= 2) {
            res.status = 500;
            res.set_content("overloaded", "text/plain");
        } else {
            reply_with(res, "[0.25, 0.5]");
        }
    });
    LlmConfig cfg = stub_config(stub);
    cfg.max_retries = 2;
    const auto t0 = std::chrono::steady_clock::now();
    auto reply = llm_query(cfg, sample_query(2));
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(reply.values[0] == 0.25);
    CHECK(reply.values[1] == 0.5);
    CHECK(stub.count() == 3);
    // two backoff sleeps: base and 2*base
    CHECK(elapsed >= 3.0 * cfg.backoff_base_s);
    CHECK(reply.latency >= elapsed - 0.05);
}

TEST_CASE("exhausted retries surface as oracle unavailability") {
    StubServer stub([](int, httplib::Response& res) {
        res.status = 503;
        res.set_content("down", "text/plain");
    });
    LlmConfig cfg = stub_config(stub);
    cfg.max_retries = 1;
    CHECK_THROWS_AS(llm_query(cfg, sample_query(1)), OracleUnavailable);
    CHECK(stub.count() == 2);
}

TEST_CASE("a hanging server past the timeout with no retries is unavailable") {
    StubServer stub([](int, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1500));
        reply_with(res, "[0.5]");
    });
    LlmConfig cfg = stub_config(stub);
    cfg.timeout_s = 0.3;
    cfg.max_retries = 0;
    const auto t0 = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(llm_query(cfg, sample_query(1)), OracleUnavailable);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(elapsed < 1.2);  // gave up at the timeout, not at the server's pace
    CHECK(stub.count() == 1);
}

TEST_CASE("malformed envelopes are treated as transport failures") {
    StubServer stub([](int, httplib::Response& res) { res.set_content("{}", "application/json"); });
    LlmConfig cfg = stub_config(stub);
    cfg.max_retries = 1;
    CHECK_THROWS_AS(llm_query(cfg, sample_query(1)), OracleUnavailable);
    CHECK(stub.count() == 2);
}

TEST_CASE("unparsable model text propagates without a transport retry") {
    StubServer stub([](int index, httplib::Response& res) {
        reply_with(res, index == 1 ? "I cannot rate these regions." : "[0.9]");
    });
    LlmConfig cfg = stub_config(stub);
    cfg.max_retries = 3;
    CHECK_THROWS_AS(llm_query(cfg, sample_query(1)), ParseError);
    CHECK(stub.count() == 1);  // re-query policy lives upstream, not here

    StubServer stub2([](int, httplib::Response& res) { reply_with(res, "[0.9, 0.8, 0.7]"); });
    LlmConfig cfg2 = stub_config(stub2);
    cfg2.max_retries = 3;
    CHECK_THROWS_AS(llm_query(cfg2, sample_query(2)), LengthError);
    CHECK(stub2.count() == 1);
}

TEST_CASE("credentials never leak into errors or the request body") {
    EnvKeyGuard key;

    // exhausted-retries error
    std::string unavailable_msg;
    {
        StubServer stub([](int, httplib::Response& res) {
            res.status = 500;
            res.set_content("err", "text/plain");
        });
        LlmConfig cfg = stub_config(stub);
        try {
            llm_query(cfg, sample_query(1));
            FAIL("expected OracleUnavailable");
        } catch (const OracleUnavailable& e) {
            unavailable_msg = e.what();
        }
        CHECK(stub.last_auth().find(kSecret) != std::string::npos);  // key was sent...
    }
    CHECK(unavailable_msg.find(kSecret) == std::string::npos);  // ...but never echoed
    CHECK(unavailable_msg.find("Bearer") == std::string::npos);

    // connection-refused error (no server at all)
    LlmConfig dead;
    dead.endpoint = "http://127.0.0.1:9/v1/chat/completions";  // discard port, nothing listens
    dead.timeout_s = 0.2;
    dead.max_retries = 0;
    dead.api_key_env = "ZEST_TEST_ORACLE_KEY";
    try {
        llm_query(dead, sample_query(1));
        FAIL("expected OracleUnavailable");
    } catch (const OracleUnavailable& e) {
        const std::string msg = e.what();
        CHECK(msg.find(kSecret) == std::string::npos);
        CHECK(msg.find("Bearer") == std::string::npos);
    }

    // request body holds prompt and image only — the key travels in the header
    StubServer stub([](int, httplib::Response& res) { reply_with(res, "[0.5]"); });
    LlmConfig cfg = stub_config(stub);
    llm_query(cfg, sample_query(1));
    CHECK(stub.last_body().find(kSecret) == std::string::npos);
}

TEST_CASE("invalid configs and queries are rejected before any request") {
    StubServer stub([](int, httplib::Response& res) { reply_with(res, "[0.5]"); });
    LlmConfig cfg = stub_config(stub);

    LlmConfig bad = cfg;
    bad.timeout_s = 0.0;
    CHECK_THROWS_AS(llm_query(bad, sample_query(1)), ValidationError);
    bad = cfg;
    bad.max_retries = -1;
    CHECK_THROWS_AS(llm_query(bad, sample_query(1)), ValidationError);
    bad = cfg;
    bad.endpoint = "127.0.0.1:8080";
    CHECK_THROWS_AS(llm_query(bad, sample_query(1)), ValidationError);
    bad = cfg;
    bad.model.clear();
    CHECK_THROWS_AS(llm_query(bad, sample_query(1)), ValidationError);

    OracleQuery q = sample_query(1);
    q.prompt.clear();
    CHECK_THROWS_AS(llm_query(cfg, q), ValidationError);
    q = sample_query(0);
    CHECK_THROWS_AS(llm_query(cfg, q), ValidationError);
    q = sample_query(1);
    q.annotated = Image();
    CHECK_THROWS_AS(llm_query(cfg, q), ValidationError);
    CHECK(stub.count() == 0);
}
