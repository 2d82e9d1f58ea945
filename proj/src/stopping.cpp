#include "interwhen/stopping.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace interwhen {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::size_t> chunk_boundaries(std::string_view text) {
    std::vector<std::size_t> out;
    std::size_t newlines = 0;  // newlines in the current whitespace run
    bool in_run = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (is_space(c)) {
            if (!in_run) {
                in_run = true;
                newlines = 0;
            }
            if (c == '\n') ++newlines;
        } else {
            if (in_run && newlines >= 2) out.push_back(i);
            in_run = false;
        }
    }
    return out;
}

double distribution_entropy(const TokenDistribution& d) {
    double h = 0.0;
    for (const auto& c : d.top) {
        double p = std::exp(c.logprob);
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

std::optional<std::string> stable_answer_key(const ExtractedState& s) {
    if (s.parse_failed) return std::nullopt;
    if (s.kind == StateKind::Equation) {
        const auto& p = std::get<EquationPayload>(s.payload);
        std::string key;
        for (char c : p.expression)
            if (!is_space(c)) key.push_back(c);
        if (key.empty()) return std::nullopt;
        return key;
    }
    if (s.kind != StateKind::AnswerProposal && s.kind != StateKind::BoxedAnswer) return std::nullopt;
    const auto& p = std::get<AnswerPayload>(s.payload);
    std::string_view t = p.text;
    auto framing = [](char c) {
        return is_space(c) || c == '.' || c == ',' || c == ';' || c == ':' || c == '"' ||
               c == '\'' || c == '*' || c == '!' || c == ')' || c == '(';
    };
    while (!t.empty() && framing(t.front())) t.remove_prefix(1);
    while (!t.empty() && framing(t.back())) t.remove_suffix(1);
    if (t.empty()) return std::nullopt;
    std::string key;
    bool pending_space = false;
    for (char c : t) {
        if (is_space(c)) {
            pending_space = !key.empty();
            continue;
        }
        if (pending_space) key.push_back(' ');
        pending_space = false;
        key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return key;
}

namespace {

std::string raw_answer_text(const ExtractedState& s) {
    if (s.kind == StateKind::Equation) return std::get<EquationPayload>(s.payload).expression;
    if (s.kind == StateKind::AnswerProposal || s.kind == StateKind::BoxedAnswer)
        return std::get<AnswerPayload>(s.payload).text;
    return {};
}

struct Streak {
    std::optional<std::string> key;
    std::string raw;
    int count = 0;

    void feed(const ExtractedState& s) {
        auto k = stable_answer_key(s);
        if (!k) {
            key.reset();
            count = 0;
            return;
        }
        if (key && *key == *k) {
            ++count;
        } else {
            key = *k;
            count = 1;
        }
        raw = raw_answer_text(s);
    }
};

class KStableMonitor final : public StoppingMonitor {
public:
    KStableMonitor(int k, std::unique_ptr<Extractor> ex) : k_(k), ex_(std::move(ex)) {}

    std::string id() const override { return "k_stable(k=" + std::to_string(k_) + ")"; }
    std::vector<const Extractor*> extractors() const override { return {ex_.get()}; }

    StopDecision on_state(std::size_t, const ExtractedState& s) override {
        streak_.feed(s);
        if (streak_.count >= k_) {
            StopDecision d;
            d.stop = true;
            d.action = ActionKind::Halt;
            d.resolved_answer = streak_.raw;
            d.reason = id() + ": answer '" + streak_.raw + "' repeated " +
                       std::to_string(streak_.count) + " times";
            return d;
        }
        return {};
    }

    void reset() override { streak_ = {}; }

private:
    int k_;
    std::unique_ptr<Extractor> ex_;
    Streak streak_;
};

class DualKStableMonitor final : public StoppingMonitor {
public:
    DualKStableMonitor(int k, std::unique_ptr<Extractor> a, std::unique_ptr<Extractor> b)
        : k_(k), a_(std::move(a)), b_(std::move(b)) {}

    std::string id() const override { return "dual_k_stable(k=" + std::to_string(k_) + ")"; }
    std::vector<const Extractor*> extractors() const override { return {a_.get(), b_.get()}; }

    StopDecision on_state(std::size_t idx, const ExtractedState& s) override {
        (idx == 0 ? first_ : second_).feed(s);
        if (first_.count >= k_ && second_.count >= k_) {
            StopDecision d;
            d.stop = true;
            d.action = ActionKind::Halt;
            d.resolved_answer = first_.raw;
            d.reason = id() + ": both answer streams stable at '" + first_.raw + "'";
            return d;
        }
        return {};
    }

    void reset() override {
        first_ = {};
        second_ = {};
    }

private:
    int k_;
    std::unique_ptr<Extractor> a_;
    std::unique_ptr<Extractor> b_;
    Streak first_;
    Streak second_;
};

class EntropyStopMonitor final : public StoppingMonitor {
public:
    explicit EntropyStopMonitor(EntropyStopOptions opts) : opts_(std::move(opts)) {}

    std::string id() const override { return "entropy_stop"; }

    StopDecision on_chunk_boundary(std::size_t, Prober& prober) override {
        auto dists = prober.probe(opts_.end_think_token, 1);
        if (dists.empty()) return {};
        double h = distribution_entropy(dists.front());
        ema_ = ema_ ? opts_.alpha * h + (1.0 - opts_.alpha) * *ema_ : h;
        if (*ema_ < opts_.threshold) {
            StopDecision d;
            d.stop = true;
            d.action = ActionKind::InjectEndThink;
            d.reason = id() + ": entropy ema " + std::to_string(*ema_) + " below " +
                       std::to_string(opts_.threshold);
            return d;
        }
        return {};
    }

    void reset() override { ema_.reset(); }

private:
    EntropyStopOptions opts_;
    std::optional<double> ema_;
};

class ConfidenceStopMonitor final : public StoppingMonitor {
public:
    explicit ConfidenceStopMonitor(ConfidenceStopOptions opts) : opts_(std::move(opts)) {}

    std::string id() const override { return "confidence_stop"; }

    StopDecision on_chunk_boundary(std::size_t, Prober& prober) override {
        auto dists = prober.probe(opts_.probe_suffix, opts_.max_probe_tokens);
        auto conf = answer_confidence(dists, opts_.aggregate);
        if (conf && *conf > opts_.threshold) {
            StopDecision d;
            d.stop = true;
            d.action = ActionKind::InjectEndThink;
            d.reason = id() + ": answer confidence " + std::to_string(*conf) + " above " +
                       std::to_string(opts_.threshold);
            return d;
        }
        return {};
    }

    void reset() override {}

private:
    ConfidenceStopOptions opts_;
};

}  // namespace

std::optional<double> answer_confidence(const std::vector<TokenDistribution>& dists,
                                        ConfidenceStopOptions::Aggregate agg) {
    auto has_alnum = [](const std::string& t) {
        return std::any_of(t.begin(), t.end(),
                           [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; });
    };
    std::vector<double> probs;
    for (const auto& d : dists) {
        if (d.top.empty()) break;
        const auto& top = d.top.front();
        if (!has_alnum(top.token)) {
            if (!probs.empty()) break;
            continue;
        }
        probs.push_back(std::exp(top.logprob));
    }
    if (probs.empty()) return std::nullopt;
    if (agg == ConfidenceStopOptions::Aggregate::Min)
        return *std::min_element(probs.begin(), probs.end());
    double log_sum = 0.0;
    for (double p : probs) log_sum += std::log(p);
    return std::exp(log_sum / static_cast<double>(probs.size()));
}

std::unique_ptr<StoppingMonitor> make_k_stable_monitor(int k, std::unique_ptr<Extractor> ex) {
    return std::make_unique<KStableMonitor>(k, std::move(ex));
}

std::unique_ptr<StoppingMonitor> make_dual_k_stable_monitor(int k, std::unique_ptr<Extractor> a,
                                                            std::unique_ptr<Extractor> b) {
    return std::make_unique<DualKStableMonitor>(k, std::move(a), std::move(b));
}

std::unique_ptr<StoppingMonitor> make_entropy_stop_monitor(EntropyStopOptions opts) {
    return std::make_unique<EntropyStopMonitor>(std::move(opts));
}

std::unique_ptr<StoppingMonitor> make_confidence_stop_monitor(ConfidenceStopOptions opts) {
    return std::make_unique<ConfidenceStopMonitor>(std::move(opts));
}

}  // namespace interwhen
