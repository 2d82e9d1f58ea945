#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace interwhen {

struct TokenCandidate {
    std::string token;
    double logprob = 0.0;
};

// Top candidates at one generation position, most probable first.
struct TokenDistribution {
    std::vector<TokenCandidate> top;
};

// One streamed generation event. Token accounting is per event.
struct TokenEvent {
    std::string text;
    std::optional<TokenDistribution> dist;
};

struct GenerationParams {
    double temperature = 0.6;
    double top_p = 0.95;
    int top_k = 20;
    int max_tokens = 32768;
};

// Named decoding presets. Unknown names fall back to the default params.
GenerationParams preset_params(std::string_view name);

struct GenerationRequest {
    std::string prompt;   // user message
    std::string prefill;  // assistant text the model must continue from
    GenerationParams params;
};

class GenerationStream {
public:
    virtual ~GenerationStream() = default;
    // Blocks for the next event; nullopt once the generation is finished.
    virtual std::optional<TokenEvent> next() = 0;
    // Set when the stream ended because of a transport failure.
    virtual std::optional<std::string> error() const { return std::nullopt; }
};

struct BackendError : std::runtime_error {
    enum class Kind { Config, Auth, Transport, Protocol };
    Kind kind;
    BackendError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;

    // Starts (or, after an in-place amendment, restarts) a generation that
    // continues req.prefill.
    virtual std::unique_ptr<GenerationStream> generate(const GenerationRequest& req) = 0;

    // Greedy continuation of req.prefill for up to max_tokens tokens,
    // returning the top-candidate distribution at each position. Used for
    // side-channel probes; does not disturb any open stream.
    virtual std::vector<TokenDistribution> probe(const GenerationRequest& req,
                                                 int max_tokens) = 0;
};

}  // namespace interwhen
