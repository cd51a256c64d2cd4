#pragma once

#include <string>

#include "zest/oracle.hpp"

namespace zest {

struct LlmConfig {
    std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "ZEST_ORACLE_API_KEY";  // name of the env var, never the key itself
    double timeout_s = 30.0;
    int max_retries = 2;
    double backoff_base_s = 1.0;  // delay before retry k is base * 2^k
};

double backoff_delay_s(const LlmConfig& cfg, int retry_index);

// Builds the chat-completions request body for `query` (exposed for tests).
std::string build_request_body(const LlmConfig& cfg, const OracleQuery& query);

// POSTs the query to an OpenAI-compatible vision endpoint and parses the
// model's text back into region values. Transport failures (connect, timeout,
// non-200, malformed envelope) are retried with exponential backoff and end in
// OracleUnavailable; a well-formed response with an unparsable list raises
// ParseError/LengthError for the caller's re-query policy. Error messages
// never include credentials.
OracleReply llm_query(const LlmConfig& cfg, const OracleQuery& query);

}  // namespace zest
