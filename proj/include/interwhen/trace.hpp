#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace interwhen {

// Half-open [begin, end) byte range into the full concatenated trace text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - begin; }
    bool operator==(const Span&) const = default;
};

enum class SegmentOrigin { Model, Intervention };

struct Segment {
    SegmentOrigin origin = SegmentOrigin::Model;
    std::string text;
    // For Model segments: number of backend token events consumed into this
    // segment. Truncation keeps the count (those tokens were still generated).
    // For Intervention segments: injected-token estimate (whitespace words).
    int token_count = 0;
};

struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// The single evolving output trace of one monitored run: the prompt plus an
// ordered list of segments, each either model-generated or injected.
class ReasoningTrace {
public:
    ReasoningTrace() = default;
    explicit ReasoningTrace(std::string prompt) : prompt_(std::move(prompt)) {}

    const std::string& prompt() const { return prompt_; }
    const std::vector<Segment>& segments() const { return segments_; }
    bool think_closed() const { return think_closed_; }
    bool halted() const { return halted_; }

    std::size_t cursor() const { return cursor_; }
    void set_cursor(std::size_t c);

    std::size_t text_length() const { return total_length_; }
    std::string full_text() const;
    std::string model_text() const;

    int model_tokens() const;
    int injected_tokens() const;

    // Appends one backend token event to the trailing Model segment,
    // creating it if the trace ends with an intervention.
    void append_model_token(std::string_view token_text);

    // Discards model text at and beyond `offset` (full-text coordinates).
    // Only the trailing run of Model segments may be cut; token counts are
    // preserved because the discarded tokens were consumed from the backend.
    void truncate_model_text(std::size_t offset);

    void append_intervention(std::string text);

    void close_think();
    void freeze() { halted_ = true; }

private:
    std::string prompt_;
    std::vector<Segment> segments_;
    std::size_t cursor_ = 0;
    std::size_t total_length_ = 0;
    bool think_closed_ = false;
    bool halted_ = false;
};

// Counts whitespace-delimited words; the offline stand-in for tokenizing
// injected text (documented in the README).
int estimate_injected_tokens(std::string_view text);

struct Verdict {
    bool pass = false;
    std::optional<std::string> feedback;
    Span state_span;
};

enum class ActionKind { Continue, InjectText, InjectEndThink, Halt };
enum class InsertAt { AfterState, AtTail };

struct InterventionAction {
    ActionKind kind = ActionKind::Continue;
    std::optional<std::string> payload;  // present iff kind == InjectText
    InsertAt insert_at = InsertAt::AfterState;
};

struct InterventionConfig {
    std::string feedback_prefix = "Wait, ";
    std::string end_think_token = "</think>";
    std::string final_answer_prompt = "\nThe final answer is";
};

// Applies one action to the trace. InjectText and InjectEndThink with
// insert_at == AfterState first discard model text beyond the span end:
// that text was conditioned on a state the verifier rejected (or on
// reasoning past the stop point).
void apply_intervention(ReasoningTrace& trace, const InterventionAction& action,
                        const Span& span, const InterventionConfig& cfg = {});

}  // namespace interwhen
