#include "interwhen/trace.hpp"

#include <cctype>

namespace interwhen {

void ReasoningTrace::set_cursor(std::size_t c) {
    if (c > total_length_) {
        throw ContractViolation("cursor past end of trace text");
    }
    cursor_ = c;
}

std::string ReasoningTrace::full_text() const {
    std::string out;
    out.reserve(total_length_);
    for (const Segment& s : segments_) out += s.text;
    return out;
}

std::string ReasoningTrace::model_text() const {
    std::string out;
    for (const Segment& s : segments_) {
        if (s.origin == SegmentOrigin::Model) out += s.text;
    }
    return out;
}

int ReasoningTrace::model_tokens() const {
    int n = 0;
    for (const Segment& s : segments_) {
        if (s.origin == SegmentOrigin::Model) n += s.token_count;
    }
    return n;
}

int ReasoningTrace::injected_tokens() const {
    int n = 0;
    for (const Segment& s : segments_) {
        if (s.origin == SegmentOrigin::Intervention) n += s.token_count;
    }
    return n;
}

void ReasoningTrace::append_model_token(std::string_view token_text) {
    if (halted_) throw ContractViolation("append to a halted trace");
    if (segments_.empty() || segments_.back().origin != SegmentOrigin::Model) {
        segments_.push_back({SegmentOrigin::Model, std::string(), 0});
    }
    Segment& seg = segments_.back();
    seg.text.append(token_text);
    seg.token_count += 1;
    total_length_ += token_text.size();
}

void ReasoningTrace::truncate_model_text(std::size_t offset) {
    if (offset > total_length_) {
        throw ContractViolation("truncate offset past end of trace text");
    }
    std::size_t end = total_length_;
    while (!segments_.empty() && end > offset) {
        Segment& seg = segments_.back();
        std::size_t begin = end - seg.text.size();
        if (seg.origin != SegmentOrigin::Model) {
            throw ContractViolation("truncation would cut an intervention segment");
        }
        if (begin >= offset) {
            // Drop the whole segment text but keep the consumed-token count
            // attached to the trace by folding it into the preceding model
            // segment, or keeping an empty segment when there is none.
            if (segments_.size() >= 2 &&
                segments_[segments_.size() - 2].origin == SegmentOrigin::Model) {
                segments_[segments_.size() - 2].token_count += seg.token_count;
                segments_.pop_back();
            } else {
                seg.text.clear();
            }
        } else {
            seg.text.resize(offset - begin);
        }
        end = begin < offset ? offset : begin;
    }
    total_length_ = offset;
    if (cursor_ > total_length_) cursor_ = total_length_;
}

void ReasoningTrace::append_intervention(std::string text) {
    if (halted_) throw ContractViolation("append to a halted trace");
    Segment seg;
    seg.origin = SegmentOrigin::Intervention;
    seg.token_count = estimate_injected_tokens(text);
    seg.text = std::move(text);
    total_length_ += seg.text.size();
    segments_.push_back(std::move(seg));
}

void ReasoningTrace::close_think() {
    if (think_closed_) {
        throw ContractViolation("think region already closed");
    }
    think_closed_ = true;
}

int estimate_injected_tokens(std::string_view text) {
    int words = 0;
    bool in_word = false;
    for (char c : text) {
        bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_word) words++;
        in_word = !ws;
    }
    return words;
}

void apply_intervention(ReasoningTrace& trace, const InterventionAction& action,
                        const Span& span, const InterventionConfig& cfg) {
    switch (action.kind) {
        case ActionKind::Continue:
            return;
        case ActionKind::InjectText: {
            if (!action.payload) {
                throw ContractViolation("InjectText action without payload");
            }
            if (action.insert_at == InsertAt::AfterState) {
                trace.truncate_model_text(span.end);
            }
            const std::string& prefix = cfg.feedback_prefix;
            std::string text = *action.payload;
            if (prefix.empty() || text.rfind(prefix, 0) != 0) {
                text = prefix + text;
            }
            trace.append_intervention(std::move(text));
            return;
        }
        case ActionKind::InjectEndThink: {
            trace.close_think();  // throws if already closed
            if (action.insert_at == InsertAt::AfterState) {
                trace.truncate_model_text(span.end);
            }
            trace.append_intervention(cfg.end_think_token + cfg.final_answer_prompt);
            return;
        }
        case ActionKind::Halt:
            trace.freeze();
            return;
    }
}

}  // namespace interwhen
