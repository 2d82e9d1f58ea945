#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "interwhen/backend.hpp"
#include "interwhen/stopping.hpp"
#include "interwhen/trace.hpp"
#include "interwhen/verifier.hpp"

namespace interwhen {

struct MonitorConfig {
    // Failed checks beyond this budget abort the run instead of injecting
    // more feedback.
    int max_interventions = 8;
    // When false the monitor only records verdicts and never amends the
    // trace (useful for measuring what an untouched run would have done).
    bool intervene = true;
    InterventionConfig intervention;
};

struct StateRecord {
    std::string binding_id;  // empty for stopping-monitor extractions
    ExtractedState state;
    Verdict verdict;
};

struct InterventionRecord {
    ActionKind kind = ActionKind::InjectText;
    std::size_t position = 0;  // byte offset of the injected segment
    std::string text;          // injected text, empty for Halt
    std::string reason;
};

struct MonitorResult {
    ReasoningTrace trace;
    std::vector<StateRecord> states;
    std::vector<InterventionRecord> interventions;
    // True when the intervention budget ran out; the trace carries no answer.
    bool aborted = false;
    std::optional<std::string> stop_reason;       // set when a stopper fired
    std::optional<std::string> resolved_answer;   // early answer from a Halt stop
    std::optional<std::string> backend_error;
    int probe_calls = 0;   // stopping-monitor probes issued
    int probe_tokens = 0;  // token distributions those probes returned
};

// Streams a generation from the backend while scanning the text for
// verifiable states. Each completed state is checked by its binding; a
// failed check truncates the trace right after the state, injects corrective
// feedback and resumes generation from the amended text. An optional
// stopping monitor sees extracted answers and chunk boundaries and may end
// the run early, either by halting (answer already known) or by closing the
// think section so the model emits its final answer.
MonitorResult run_monitored_generation(Backend& backend, const std::string& prompt,
                                       const GenerationParams& params,
                                       const std::vector<VerifierBinding*>& bindings,
                                       StoppingMonitor* stopper = nullptr,
                                       const MonitorConfig& cfg = {});

struct RecheckReport {
    int checked = 0;
    std::vector<StateRecord> failures;
    bool sound() const { return failures.empty(); }
};

// Re-extracts and re-verifies every state of a finished trace from scratch.
// States inside injected segments are ignored, as are states a feedback
// injection retracted (their span ends exactly where an injected segment
// begins). Bindings are reset before use.
RecheckReport recheck_trace(const ReasoningTrace& trace,
                            const std::vector<VerifierBinding*>& bindings);

}  // namespace interwhen
