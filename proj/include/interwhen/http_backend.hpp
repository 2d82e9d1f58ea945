#pragma once

#include <memory>
#include <string>

#include "interwhen/backend.hpp"

namespace interwhen {

// Client for an OpenAI-compatible chat completions endpoint with SSE
// streaming and assistant-prefill continuation.
struct HttpBackendConfig {
    std::string base_url = "http://127.0.0.1:8000";
    std::string api_key;
    std::string model = "default";
    int max_retries = 3;
    int retry_backoff_ms = 250;
    int top_logprobs = 20;  // clamped to the protocol maximum of 20
    bool send_top_k = true; // top_k goes out as a vendor extension field
    int connect_timeout_s = 10;
    int read_timeout_s = 300;
    bool preflight = true;  // GET /v1/models before first use
};

// Reads INTERWHEN_BASE_URL, INTERWHEN_API_KEY and INTERWHEN_MODEL.
HttpBackendConfig http_config_from_env();

// Throws BackendError{Config} when the endpoint is unreachable and
// BackendError{Auth} when the preflight is rejected with 401/403.
std::unique_ptr<Backend> make_http_backend(HttpBackendConfig cfg);

}  // namespace interwhen
