#include "zest/llm_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "zest/errors.hpp"
#include "zest/image.hpp"

namespace zest {

namespace {

struct Endpoint {
    std::string host;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError("llm endpoint must include a scheme, e.g. http://host:port/path");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/v1/chat/completions"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

void check(const LlmConfig& cfg, const OracleQuery& query) {
    if (!(cfg.timeout_s > 0.0)) throw ValidationError("llm config: timeout must be positive");
    if (cfg.max_retries < 0) throw ValidationError("llm config: max retries must be >= 0");
    if (!(cfg.backoff_base_s > 0.0)) throw ValidationError("llm config: backoff base must be positive");
    if (cfg.model.empty()) throw ValidationError("llm config: model name is empty");
    if (query.prompt.empty()) throw ValidationError("llm query: prompt is empty");
    if (query.n_regions < 1) throw ValidationError("llm query: region count must be >= 1");
    if (query.annotated.width < 1 || query.annotated.height < 1) {
        throw ValidationError("llm query: annotated image is empty");
    }
}

}  // namespace

double backoff_delay_s(const LlmConfig& cfg, int retry_index) {
    return cfg.backoff_base_s * std::pow(2.0, retry_index);
}

std::string build_request_body(const LlmConfig& cfg, const OracleQuery& query) {
    const auto png = encode_png(query.annotated);
    nlohmann::json body{
        {"model", cfg.model},
        {"temperature", 0},
        {"messages",
         {{{"role", "user"},
           {"content",
            {{{"type", "text"}, {"text", query.prompt}},
             {{"type", "image_url"},
              {"image_url",
               {{"url", "data:image/png;base64," + base64_encode(png.data(), png.size())}}}}}}}}},
    };
    return body.dump();
}

OracleReply llm_query(const LlmConfig& cfg, const OracleQuery& query) {
    check(cfg, query);
    const Endpoint ep = split_endpoint(cfg.endpoint);
    const std::string body = build_request_body(cfg, query);

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const auto t0 = std::chrono::steady_clock::now();
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::duration<double>(backoff_delay_s(cfg, attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(ep.host);
        const auto timeout =
            std::chrono::milliseconds(static_cast<long long>(cfg.timeout_s * 1000.0));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto res = client.Post(ep.path, headers, body, "application/json");
        if (!res) {
            last_error = std::string("transport error: ") + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        nlohmann::json envelope = nlohmann::json::parse(res->body, nullptr, false);
        if (envelope.is_discarded() || !envelope.contains("choices") ||
            !envelope["choices"].is_array() || envelope["choices"].empty() ||
            !envelope["choices"][0].contains("message") ||
            !envelope["choices"][0]["message"].contains("content") ||
            !envelope["choices"][0]["message"]["content"].is_string()) {
            last_error = "malformed response envelope";
            continue;
        }
        const std::string content = envelope["choices"][0]["message"]["content"].get<std::string>();
        OracleReply reply;
        reply.values = parse_reply(content, query.n_regions);
        reply.latency =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return reply;
    }
    throw OracleUnavailable("oracle unavailable after " + std::to_string(cfg.max_retries + 1) +
                            " attempt(s); last error: " + last_error);
}

}  // namespace zest
