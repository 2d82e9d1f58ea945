#include "interwhen/monitor.hpp"

#include <algorithm>
#include <cctype>
#include <memory>
#include <utility>

namespace interwhen {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Prober anchored at one prefix of the trace text.
class BackendProber final : public Prober {
public:
    BackendProber(Backend& backend, const std::string& prompt, std::string prefix,
                  const GenerationParams& params, MonitorResult* tally)
        : backend_(backend), prompt_(prompt), prefix_(std::move(prefix)), params_(params),
          tally_(tally) {}

    std::vector<TokenDistribution> probe(const std::string& suffix, int max_tokens) override {
        GenerationRequest req;
        req.prompt = prompt_;
        req.prefill = prefix_ + suffix;
        req.params = params_;
        auto out = backend_.probe(req, max_tokens);
        if (tally_) {
            ++tally_->probe_calls;
            tally_->probe_tokens += static_cast<int>(out.size());
        }
        return out;
    }

private:
    Backend& backend_;
    const std::string& prompt_;
    std::string prefix_;
    GenerationParams params_;
    MonitorResult* tally_;
};

// Incremental blank-line chunk boundary detector (same rule as
// chunk_boundaries, but resumable and rewindable after truncation).
struct BoundaryScanner {
    std::size_t pos = 0;
    std::size_t newlines = 0;
    bool in_run = false;

    void advance(std::string_view text, std::vector<std::size_t>& out) {
        for (; pos < text.size(); ++pos) {
            char c = text[pos];
            if (is_space(c)) {
                if (!in_run) {
                    in_run = true;
                    newlines = 0;
                }
                if (c == '\n') ++newlines;
            } else {
                if (in_run && newlines >= 2) out.push_back(pos);
                in_run = false;
            }
        }
    }

    void rewind(std::string_view text, std::size_t to) {
        if (to > text.size()) to = text.size();
        if (to >= pos) return;
        pos = to;
        std::size_t j = to;
        newlines = 0;
        while (j > 0 && is_space(text[j - 1])) {
            if (text[j - 1] == '\n') ++newlines;
            --j;
        }
        in_run = j < to;
    }
};

constexpr int kBindingState = 0;
constexpr int kStopperState = 1;
constexpr int kChunkBoundary = 2;

struct PendingEvent {
    std::size_t pos = 0;
    int klass = kBindingState;
    std::size_t source = 0;  // binding index or stopper extractor index
    ExtractedState state;
};

}  // namespace

MonitorResult run_monitored_generation(Backend& backend, const std::string& prompt,
                                       const GenerationParams& params,
                                       const std::vector<VerifierBinding*>& bindings,
                                       StoppingMonitor* stopper, const MonitorConfig& cfg) {
    MonitorResult result;
    result.trace = ReasoningTrace(prompt);
    ReasoningTrace& trace = result.trace;

    for (VerifierBinding* b : bindings) b->reset();
    if (stopper) stopper->reset();

    struct Source {
        const Extractor* ex;
        int klass;
        std::size_t index;
    };
    std::vector<Source> sources;
    for (std::size_t i = 0; i < bindings.size(); ++i)
        sources.push_back({&bindings[i]->extractor(), kBindingState, i});
    if (stopper) {
        auto exs = stopper->extractors();
        for (std::size_t i = 0; i < exs.size(); ++i)
            sources.push_back({exs[i], kStopperState, i});
    }
    std::vector<std::size_t> cursors(sources.size(), 0);

    std::string text;  // mirror of trace.full_text()
    BoundaryScanner boundary;
    int interventions_used = 0;
    bool done = false;

    // After the trace was amended at `cut`: resync the text mirror, pull
    // every cursor back to the amendment point and rewind boundary scanning.
    auto resync = [&](std::size_t cut) {
        text = trace.full_text();
        for (std::size_t& c : cursors) c = std::min(c, cut);
        boundary.rewind(text, cut);
    };

    std::unique_ptr<GenerationStream> stream;
    auto restart_stream = [&]() {
        try {
            stream = backend.generate({prompt, text, params});
            return true;
        } catch (const BackendError& e) {
            result.backend_error = e.what();
            done = true;
            return false;
        }
    };

    if (!restart_stream()) return result;

    while (!done) {
        bool final = false;
        std::optional<TokenEvent> ev;
        try {
            ev = stream->next();
        } catch (const BackendError& e) {
            result.backend_error = e.what();
            break;
        }
        if (!ev) {
            if (auto err = stream->error()) {
                result.backend_error = *err;
                break;
            }
            final = true;
        } else {
            if (ev->text.empty()) continue;
            trace.append_model_token(ev->text);
            text += ev->text;
        }

        // Collect every state that completed in the new text, plus chunk
        // boundaries, and order them by position in the trace.
        std::vector<PendingEvent> events;
        for (std::size_t i = 0; i < sources.size(); ++i) {
            ScanResult r = sources[i].ex->scan(text, cursors[i], final);
            cursors[i] = r.new_cursor;
            for (ExtractedState& st : r.states) {
                PendingEvent pe;
                pe.pos = st.span.end;
                pe.klass = sources[i].klass;
                pe.source = sources[i].index;
                pe.state = std::move(st);
                events.push_back(std::move(pe));
            }
        }
        if (stopper && !trace.think_closed()) {
            std::vector<std::size_t> bpos;
            boundary.advance(text, bpos);
            for (std::size_t p : bpos) {
                PendingEvent pe;
                pe.pos = p;
                pe.klass = kChunkBoundary;
                events.push_back(std::move(pe));
            }
        }
        std::stable_sort(events.begin(), events.end(),
                         [](const PendingEvent& a, const PendingEvent& b) {
                             if (a.pos != b.pos) return a.pos < b.pos;
                             if (a.klass != b.klass) return a.klass < b.klass;
                             if (a.klass == kChunkBoundary) return false;
                             return a.source < b.source;
                         });

        bool restarted = false;
        for (std::size_t idx = 0; idx < events.size(); ++idx) {
            PendingEvent& pe = events[idx];

            // An amendment truncated the trace at `cut`. Pending states
            // ending exactly at the cut survived the truncation but were
            // never checked; pull their source cursors back so the next
            // scan re-reports them.
            auto rescue_pending = [&](std::size_t cut) {
                for (std::size_t j = idx + 1; j < events.size(); ++j) {
                    const PendingEvent& later = events[j];
                    if (later.klass == kChunkBoundary) continue;
                    if (later.state.span.end > cut) continue;
                    for (std::size_t s = 0; s < sources.size(); ++s) {
                        if (sources[s].klass == later.klass && sources[s].index == later.source)
                            cursors[s] = std::min(cursors[s], later.state.span.begin);
                    }
                }
            };

            auto handle_stop = [&](const StopDecision& dec, std::size_t pos) {
                result.stop_reason = dec.reason;
                if (dec.action != ActionKind::InjectEndThink) {
                    apply_intervention(trace, {ActionKind::Halt, std::nullopt, InsertAt::AtTail},
                                       Span{pos, pos}, cfg.intervention);
                    result.interventions.push_back({ActionKind::Halt, pos, "", dec.reason});
                    result.resolved_answer = dec.resolved_answer;
                    done = true;
                    return;
                }
                apply_intervention(trace,
                                   {ActionKind::InjectEndThink, std::nullopt, InsertAt::AfterState},
                                   Span{pos, pos}, cfg.intervention);
                result.interventions.push_back(
                    {ActionKind::InjectEndThink, pos, trace.segments().back().text, dec.reason});
                rescue_pending(pos);
                resync(pos);
                restarted = restart_stream();
            };

            if (pe.klass == kBindingState) {
                VerifierBinding* b = bindings[pe.source];
                Verdict v = b->check(pe.state);
                v.state_span = pe.state.span;
                result.states.push_back({b->id(), pe.state, v});
                if (v.pass || !cfg.intervene || trace.think_closed()) continue;
                if (interventions_used >= cfg.max_interventions) {
                    apply_intervention(trace, {ActionKind::Halt, std::nullopt, InsertAt::AtTail},
                                       pe.state.span, cfg.intervention);
                    result.interventions.push_back(
                        {ActionKind::Halt, pe.state.span.end, "",
                         "intervention budget exhausted after failed check by " + b->id()});
                    result.aborted = true;
                    done = true;
                    break;
                }
                std::size_t cut = pe.state.span.end;
                std::string payload = v.feedback.value_or("that step does not hold; re-check it");
                apply_intervention(trace, {ActionKind::InjectText, payload, InsertAt::AfterState},
                                   pe.state.span, cfg.intervention);
                ++interventions_used;
                result.interventions.push_back({ActionKind::InjectText, cut,
                                                trace.segments().back().text,
                                                b->id() + ": " + payload});
                rescue_pending(cut);
                resync(cut);
                restart_stream();
                break;
            }

            if (pe.klass == kStopperState) {
                StopDecision dec = stopper->on_state(pe.source, pe.state);
                Verdict v;
                v.pass = true;
                v.state_span = pe.state.span;
                result.states.push_back({stopper->id(), pe.state, v});
                if (!dec.stop) continue;
                handle_stop(dec, pe.state.span.end);
                break;
            }

            // Chunk boundary.
            if (!stopper || trace.think_closed()) continue;
            StopDecision dec;
            try {
                BackendProber prober(backend, prompt, text.substr(0, pe.pos), params, &result);
                dec = stopper->on_chunk_boundary(pe.pos, prober);
            } catch (const BackendError& e) {
                result.backend_error = e.what();
                done = true;
                break;
            }
            if (!dec.stop) continue;
            handle_stop(dec, pe.pos);
            break;
        }

        if (done) break;
        if (restarted) continue;
        if (final) break;
    }

    return result;
}

RecheckReport recheck_trace(const ReasoningTrace& trace,
                            const std::vector<VerifierBinding*>& bindings) {
    RecheckReport rep;
    for (VerifierBinding* b : bindings) b->reset();

    std::string text = trace.full_text();
    std::vector<Span> injected;
    std::size_t off = 0;
    for (const Segment& s : trace.segments()) {
        if (s.origin == SegmentOrigin::Intervention)
            injected.push_back({off, off + s.text.size()});
        off += s.text.size();
    }
    auto skip = [&](const Span& sp) {
        for (const Span& seg : injected) {
            if (sp.begin < seg.end && seg.begin < sp.end) return true;  // inside injected text
            if (seg.begin == sp.end) return true;  // retracted by the injection right after it
        }
        return false;
    };

    struct Ev {
        std::size_t pos;
        std::size_t binding;
        ExtractedState state;
    };
    std::vector<Ev> events;
    for (std::size_t i = 0; i < bindings.size(); ++i) {
        ScanResult r = bindings[i]->extractor().scan(text, 0, true);
        for (ExtractedState& st : r.states) {
            std::size_t end = st.span.end;
            events.push_back({end, i, std::move(st)});
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const Ev& a, const Ev& b) {
        if (a.pos != b.pos) return a.pos < b.pos;
        return a.binding < b.binding;
    });

    for (Ev& e : events) {
        if (skip(e.state.span)) continue;
        Verdict v = bindings[e.binding]->check(e.state);
        ++rep.checked;
        if (!v.pass) rep.failures.push_back({bindings[e.binding]->id(), e.state, v});
    }
    return rep;
}

}  // namespace interwhen
