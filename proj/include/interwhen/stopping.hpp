#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "interwhen/backend.hpp"
#include "interwhen/extraction.hpp"
#include "interwhen/trace.hpp"

namespace interwhen {

// Positions i where text[i] starts a new reasoning chunk: the character is
// not whitespace and the whitespace run immediately before it contains at
// least two newlines (a blank line).
std::vector<std::size_t> chunk_boundaries(std::string_view text);

// Shannon entropy in nats over the listed candidates, -sum p ln p with
// p = exp(logprob). Candidates beyond the listed top are ignored.
double distribution_entropy(const TokenDistribution& d);

// Canonical comparison key for answer-like states: answers are case-folded
// and stripped of framing punctuation, equations lose their whitespace.
// States that are not answers (or failed to parse) have no key.
std::optional<std::string> stable_answer_key(const ExtractedState& s);

// Greedy continuation probe anchored at one position of the evolving trace.
class Prober {
public:
    virtual ~Prober() = default;
    // Distributions for up to max_tokens greedy tokens after appending
    // `suffix` to the model text at the anchor.
    virtual std::vector<TokenDistribution> probe(const std::string& suffix, int max_tokens) = 0;
};

struct StopDecision {
    bool stop = false;
    // Halt ends generation outright (the answer is already known);
    // InjectEndThink closes the think section and elicits a final answer.
    ActionKind action = ActionKind::Halt;
    std::optional<std::string> resolved_answer;
    std::string reason;
};

// Early-stopping policy consulted by the monitor. Monitors that track
// extracted states publish extractors(); the monitor feeds each reported
// state to on_state with the index of the extractor that produced it.
// Monitors that probe the model are called at chunk boundaries.
class StoppingMonitor {
public:
    virtual ~StoppingMonitor() = default;
    virtual std::string id() const = 0;
    virtual std::vector<const Extractor*> extractors() const { return {}; }
    virtual StopDecision on_state(std::size_t extractor_index, const ExtractedState& state) {
        (void)extractor_index;
        (void)state;
        return {};
    }
    virtual StopDecision on_chunk_boundary(std::size_t pos, Prober& prober) {
        (void)pos;
        (void)prober;
        return {};
    }
    virtual void reset() = 0;
};

// Stops (Halt) once k consecutive extracted answers are equivalent.
std::unique_ptr<StoppingMonitor> make_k_stable_monitor(int k, std::unique_ptr<Extractor> ex);

// Variant with two answer sources; stops only when both streaks reach k at
// the same time. The resolved answer comes from the first source.
std::unique_ptr<StoppingMonitor> make_dual_k_stable_monitor(int k, std::unique_ptr<Extractor> a,
                                                            std::unique_ptr<Extractor> b);

struct EntropyStopOptions {
    double threshold = 0.04;
    double alpha = 0.3;  // EMA weight of the newest observation; 1 = raw
    std::string end_think_token = "</think>";
};

// Probes the next-token distribution after a forced think close at every
// chunk boundary; stops (InjectEndThink) when the entropy EMA drops below
// the threshold.
std::unique_ptr<StoppingMonitor> make_entropy_stop_monitor(EntropyStopOptions opts);

struct ConfidenceStopOptions {
    double threshold = 0.95;
    std::string probe_suffix = "</think> The answer is";
    int max_probe_tokens = 8;
    enum class Aggregate { GeoMean, Min } aggregate = Aggregate::GeoMean;
};

// Probes a short greedy answer continuation at every chunk boundary; stops
// (InjectEndThink) when the aggregated top-token confidence over the answer
// tokens exceeds the threshold.
std::unique_ptr<StoppingMonitor> make_confidence_stop_monitor(ConfidenceStopOptions opts);

// Aggregated confidence over the greedy answer tokens of a probe result:
// leading tokens without alphanumeric characters are skipped, the answer
// ends at the first such token after it began. Empty when no answer token
// was seen.
std::optional<double> answer_confidence(const std::vector<TokenDistribution>& dists,
                                        ConfidenceStopOptions::Aggregate agg);

}  // namespace interwhen
