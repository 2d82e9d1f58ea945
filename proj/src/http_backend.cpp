#include "interwhen/http_backend.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace interwhen {

namespace {

using nlohmann::json;

std::string env_or(const char* name, const char* fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

httplib::Headers auth_headers(const HttpBackendConfig& cfg) {
    httplib::Headers h;
    if (!cfg.api_key.empty()) h.emplace("Authorization", "Bearer " + cfg.api_key);
    return h;
}

json chat_body(const HttpBackendConfig& cfg, const GenerationRequest& req, bool stream) {
    json messages = json::array();
    messages.push_back({{"role", "user"}, {"content", req.prompt}});
    json body{
        {"model", cfg.model},
        {"messages", messages},
        {"stream", stream},
        {"temperature", req.params.temperature},
        {"top_p", req.params.top_p},
        {"max_tokens", req.params.max_tokens},
    };
    if (!req.prefill.empty()) {
        body["messages"].push_back({{"role", "assistant"}, {"content", req.prefill}});
        // vendor extensions understood by vLLM-style servers
        body["add_generation_prompt"] = false;
        body["continue_final_message"] = true;
    }
    if (cfg.send_top_k && req.params.top_k > 0) body["top_k"] = req.params.top_k;
    return body;
}

TokenDistribution dist_from_entry(const json& entry) {
    TokenDistribution d;
    if (entry.contains("top_logprobs") && entry["top_logprobs"].is_array() &&
        !entry["top_logprobs"].empty()) {
        for (const auto& c : entry["top_logprobs"])
            d.top.push_back({c.value("token", ""), c.value("logprob", 0.0)});
    } else {
        d.top.push_back({entry.value("token", ""), entry.value("logprob", 0.0)});
    }
    std::sort(d.top.begin(), d.top.end(),
              [](const TokenCandidate& a, const TokenCandidate& b) {
                  return a.logprob > b.logprob;
              });
    return d;
}

class SseStream final : public GenerationStream {
public:
    SseStream(HttpBackendConfig cfg, std::string body) : cfg_(std::move(cfg)) {
        worker_ = std::thread([this, body = std::move(body)] { run(body); });
    }

    ~SseStream() override {
        cancel_.store(true);
        worker_.join();
    }

    std::optional<TokenEvent> next() override {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !queue_.empty() || done_; });
        if (queue_.empty()) return std::nullopt;
        TokenEvent ev = std::move(queue_.front());
        queue_.pop_front();
        return ev;
    }

    std::optional<std::string> error() const override {
        std::unique_lock lock(mu_);
        return error_;
    }

private:
    void push(TokenEvent ev) {
        {
            std::unique_lock lock(mu_);
            queue_.push_back(std::move(ev));
            produced_ = true;
        }
        cv_.notify_all();
    }

    void finish(std::optional<std::string> err) {
        {
            std::unique_lock lock(mu_);
            if (err && !error_) error_ = std::move(err);
            done_ = true;
        }
        cv_.notify_all();
    }

    void feed(const char* data, std::size_t len) {
        buffer_.append(data, len);
        std::size_t nl;
        while ((nl = buffer_.find('\n')) != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.starts_with("data:")) continue;
            std::string payload = line.substr(5);
            std::size_t b = payload.find_first_not_of(' ');
            if (b == std::string::npos) continue;
            payload.erase(0, b);
            if (payload == "[DONE]") continue;
            handle_chunk(payload);
        }
    }

    void handle_chunk(const std::string& payload) {
        json j = json::parse(payload, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) return;
        const json& choice = j["choices"][0];
        if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
            choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array() &&
            !choice["logprobs"]["content"].empty()) {
            for (const auto& entry : choice["logprobs"]["content"]) {
                TokenEvent ev;
                ev.text = entry.value("token", "");
                ev.dist = dist_from_entry(entry);
                push(std::move(ev));
            }
            return;
        }
        if (choice.contains("delta")) {
            std::string content = choice["delta"].value("content", "");
            if (!content.empty()) push(TokenEvent{std::move(content), std::nullopt});
        }
    }

    void run(const std::string& body) {
        for (int attempt = 0;; ++attempt) {
            httplib::Client cli(cfg_.base_url);
            cli.set_connection_timeout(cfg_.connect_timeout_s, 0);
            cli.set_read_timeout(cfg_.read_timeout_s, 0);
            httplib::Request req;
            req.method = "POST";
            req.path = "/v1/chat/completions";
            for (auto& [k, v] : auth_headers(cfg_)) req.set_header(k, v);
            req.set_header("Content-Type", "application/json");
            req.set_header("Accept", "text/event-stream");
            req.body = body;
            req.content_receiver = [this](const char* data, std::size_t len, std::uint64_t,
                                          std::uint64_t) {
                if (cancel_.load()) return false;
                feed(data, len);
                return true;
            };
            httplib::Response res;
            httplib::Error err = httplib::Error::Success;
            bool ok = cli.send(req, res, err);
            if (cancel_.load()) {
                finish(std::nullopt);
                return;
            }
            if (ok && res.status == 200) {
                finish(std::nullopt);
                return;
            }
            bool retryable = !produced_ && attempt + 1 < cfg_.max_retries &&
                             (!ok || res.status >= 500);
            if (retryable) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(cfg_.retry_backoff_ms * (attempt + 1)));
                continue;
            }
            std::string msg = ok ? "completions request failed with status " +
                                       std::to_string(res.status)
                                 : "completions request failed: " + httplib::to_string(err);
            finish(std::move(msg));
            return;
        }
    }

    HttpBackendConfig cfg_;
    std::thread worker_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<TokenEvent> queue_;
    bool done_ = false;
    std::atomic<bool> produced_{false};
    std::optional<std::string> error_;
    std::atomic<bool> cancel_{false};
    std::string buffer_;
};

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.top_logprobs = std::clamp(cfg_.top_logprobs, 1, 20);
        if (cfg_.preflight) preflight();
    }

    std::string id() const override { return "http:" + cfg_.base_url + "#" + cfg_.model; }

    std::unique_ptr<GenerationStream> generate(const GenerationRequest& req) override {
        return std::make_unique<SseStream>(cfg_, chat_body(cfg_, req, true).dump());
    }

    std::vector<TokenDistribution> probe(const GenerationRequest& req, int max_tokens) override {
        json body = chat_body(cfg_, req, false);
        body["temperature"] = 0.0;
        body["top_p"] = 1.0;
        body["max_tokens"] = max_tokens;
        body["logprobs"] = true;
        body["top_logprobs"] = cfg_.top_logprobs;
        body.erase("top_k");
        std::string err;
        for (int attempt = 0; attempt < cfg_.max_retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(cfg_.retry_backoff_ms * attempt));
            httplib::Client cli(cfg_.base_url);
            cli.set_connection_timeout(cfg_.connect_timeout_s, 0);
            cli.set_read_timeout(cfg_.read_timeout_s, 0);
            auto res = cli.Post("/v1/chat/completions", auth_headers(cfg_), body.dump(),
                                "application/json");
            if (!res) {
                err = "probe request failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                err = "probe request failed with status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw BackendError(BackendError::Kind::Protocol,
                                   "probe request failed with status " +
                                       std::to_string(res->status));
            json j = json::parse(res->body, nullptr, false);
            if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
                throw BackendError(BackendError::Kind::Protocol,
                                   "probe response is not a chat completion");
            const json& choice = j["choices"][0];
            std::vector<TokenDistribution> out;
            if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
                choice["logprobs"].contains("content") &&
                choice["logprobs"]["content"].is_array()) {
                for (const auto& entry : choice["logprobs"]["content"])
                    out.push_back(dist_from_entry(entry));
            }
            return out;
        }
        throw BackendError(BackendError::Kind::Transport, err);
    }

private:
    void preflight() {
        httplib::Client cli(cfg_.base_url);
        cli.set_connection_timeout(cfg_.connect_timeout_s, 0);
        cli.set_read_timeout(cfg_.read_timeout_s, 0);
        auto res = cli.Get("/v1/models", auth_headers(cfg_));
        if (!res)
            throw BackendError(BackendError::Kind::Config,
                               "cannot reach " + cfg_.base_url + ": " +
                                   httplib::to_string(res.error()));
        if (res->status == 401 || res->status == 403)
            throw BackendError(BackendError::Kind::Auth,
                               "endpoint rejected the API key (status " +
                                   std::to_string(res->status) + ")");
    }

    HttpBackendConfig cfg_;
};

}  // namespace

HttpBackendConfig http_config_from_env() {
    HttpBackendConfig cfg;
    cfg.base_url = env_or("INTERWHEN_BASE_URL", cfg.base_url.c_str());
    cfg.api_key = env_or("INTERWHEN_API_KEY", "");
    cfg.model = env_or("INTERWHEN_MODEL", cfg.model.c_str());
    return cfg;
}

std::unique_ptr<Backend> make_http_backend(HttpBackendConfig cfg) {
    return std::make_unique<HttpBackend>(std::move(cfg));
}

}  // namespace interwhen
