#include "interwhen/extraction.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace interwhen {

std::string_view state_kind_name(StateKind k) {
    switch (k) {
        case StateKind::MazeLocate: return "maze_locate";
        case StateKind::MazeStep: return "maze_step";
        case StateKind::SpatialRelations: return "spatial_relations";
        case StateKind::SpatialConclusion: return "spatial_conclusion";
        case StateKind::AnswerProposal: return "answer_proposal";
        case StateKind::BoxedAnswer: return "boxed_answer";
        case StateKind::Equation: return "equation";
        case StateKind::Artifact: return "artifact";
    }
    return "";
}

namespace {

constexpr std::size_t npos = std::string_view::npos;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char lower1(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = lower1(c);
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool iequal(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (lower1(a[i]) != lower1(b[i])) return false;
    return true;
}

bool istarts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequal(s.substr(0, prefix.size()), prefix);
}

// needle must already be lowercase
std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from) {
    if (needle.empty() || from > hay.size()) return npos;
    if (needle.size() > hay.size()) return npos;
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        std::size_t j = 0;
        while (j < needle.size() && lower1(hay[i + j]) == needle[j]) ++j;
        if (j == needle.size()) return i;
    }
    return npos;
}

struct LineView {
    std::size_t begin = 0;
    std::string_view content;
    std::size_t content_end = 0;
    std::size_t next = 0;   // start of the following line (past the newline)
    bool complete = false;  // terminating newline has arrived
};

LineView get_line(std::string_view text, std::size_t pos) {
    LineView ln;
    ln.begin = pos;
    std::size_t nl = text.find('\n', pos);
    if (nl == npos) {
        ln.content = text.substr(pos);
        ln.content_end = text.size();
        ln.next = text.size();
        ln.complete = false;
    } else {
        ln.content = text.substr(pos, nl - pos);
        ln.content_end = nl;
        ln.next = nl + 1;
        ln.complete = true;
    }
    if (!ln.content.empty() && ln.content.back() == '\r') {
        ln.content.remove_suffix(1);
        --ln.content_end;
    }
    return ln;
}

// Small cursor over a single line used by the block parsers.
struct FieldParser {
    std::string_view s;
    std::size_t i = 0;

    explicit FieldParser(std::string_view sv) : s(sv) {}

    void skip_ws() {
        while (i < s.size() && is_space(s[i])) ++i;
    }
    bool done() {
        skip_ws();
        return i >= s.size();
    }
    bool lit(char c) {
        skip_ws();
        if (i < s.size() && s[i] == c) {
            ++i;
            return true;
        }
        return false;
    }
    std::string_view word() {
        skip_ws();
        std::size_t b = i;
        while (i < s.size() && (is_alnum(s[i]) || s[i] == '_' || s[i] == '-')) ++i;
        return s.substr(b, i - b);
    }
    bool keyword(std::string_view w) {
        std::size_t save = i;
        if (iequal(word(), w)) return true;
        i = save;
        return false;
    }
    std::optional<long long> integer() {
        skip_ws();
        std::size_t b = i;
        bool neg = false;
        if (i < s.size() && s[i] == '-') {
            neg = true;
            ++i;
        }
        if (i >= s.size() || !is_digit(s[i])) {
            i = b;
            return std::nullopt;
        }
        long long v = 0;
        while (i < s.size() && is_digit(s[i])) v = v * 10 + (s[i++] - '0');
        return neg ? -v : v;
    }
    std::optional<GridPos> grid_pos() {
        std::size_t save = i;
        if (!lit('(')) {
            i = save;
            return std::nullopt;
        }
        auto r = integer();
        if (!r || !lit(',')) {
            i = save;
            return std::nullopt;
        }
        auto c = integer();
        if (!c || !lit(')')) {
            i = save;
            return std::nullopt;
        }
        return GridPos{static_cast<int>(*r), static_cast<int>(*c)};
    }
};

std::string_view strip_bullet(std::string_view s) {
    s = trim(s);
    while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '>')) {
        s.remove_prefix(1);
        s = trim(s);
    }
    if (s.starts_with("\xE2\x80\xA2")) s = trim(s.substr(3));  // bullet char
    // enumerators like "3." or "12)"
    std::size_t d = 0;
    while (d < s.size() && is_digit(s[d])) ++d;
    if (d > 0 && d < s.size() && (s[d] == '.' || s[d] == ')')) s = trim(s.substr(d + 1));
    return s;
}

std::string_view strip_quotes(std::string_view s) {
    s = trim(s);
    while (!s.empty() && (s.front() == '"' || s.front() == '\'' || s.front() == '`'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == '"' || s.back() == '\'' || s.back() == '`'))
        s.remove_suffix(1);
    return trim(s);
}

std::string_view strip_trailing_punct(std::string_view s) {
    auto hit = [](char c) {
        return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' ||
               c == ')' || c == '"' || c == '\'' || c == '*' || c == '_' || c == '`';
    };
    while (!s.empty() && (hit(s.back()) || is_space(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view strip_leading_article(std::string_view s) {
    if (istarts_with(s, "the ")) return trim(s.substr(4));
    return s;
}

// ---------------------------------------------------------------- answers

class AnswerExtractor final : public Extractor {
public:
    explicit AnswerExtractor(AnswerExtractorOptions opts) : opts_(std::move(opts)) {
        for (auto& p : opts_.phrases) p = lower(p);
        std::sort(opts_.phrases.begin(), opts_.phrases.end(),
                  [](const auto& a, const auto& b) { return a.size() > b.size(); });
        std::sort(opts_.option_texts.begin(), opts_.option_texts.end(),
                  [](const auto& a, const auto& b) { return a.size() > b.size(); });
        for (char& c : opts_.letters) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        guard_ = kBoxed.size();
        for (const auto& p : opts_.phrases) guard_ = std::max(guard_, p.size());
    }

    std::string id() const override { return "answer"; }

    ScanResult scan(std::string_view text, std::size_t cursor, bool final) const override {
        ScanResult out;
        std::size_t pos = cursor;
        std::optional<std::size_t> park;
        while (true) {
            std::size_t best = npos;
            std::size_t best_len = 0;
            bool best_boxed = false;
            for (const auto& p : opts_.phrases) {
                std::size_t t = ifind(text, p, pos);
                if (t != npos && (t < best || (t == best && p.size() > best_len))) {
                    best = t;
                    best_len = p.size();
                    best_boxed = false;
                }
            }
            std::size_t bx = text.find(kBoxed, pos);
            if (bx != npos && bx < best) {
                best = bx;
                best_len = kBoxed.size();
                best_boxed = true;
            }
            if (best == npos) break;
            if (best_boxed) {
                std::size_t rb = text.find('}', best + kBoxed.size());
                if (rb == npos) {
                    if (!final) {
                        park = best;
                        break;
                    }
                    pos = best + kBoxed.size();
                    continue;
                }
                ExtractedState st;
                st.kind = StateKind::BoxedAnswer;
                st.payload = AnswerPayload{
                    std::string(trim(text.substr(best + kBoxed.size(), rb - best - kBoxed.size())))};
                st.span = {best, rb + 1};
                out.states.push_back(std::move(st));
                pos = rb + 1;
                continue;
            }
            // word boundary before alphabetic phrases
            if (best > 0 && is_alnum(text[best - 1])) {
                pos = best + 1;
                continue;
            }
            auto m = match_option(text, best + best_len, final);
            if (m.incomplete) {
                park = best;
                break;
            }
            if (!m.matched) {
                pos = best + best_len;
                continue;
            }
            ExtractedState st;
            st.kind = StateKind::AnswerProposal;
            st.payload = AnswerPayload{std::string(m.token)};
            st.span = {best, m.end};
            out.states.push_back(std::move(st));
            pos = m.end;
        }
        if (park) {
            out.new_cursor = std::max(cursor, std::min(*park, text.size()));
        } else if (final) {
            out.new_cursor = text.size();
        } else {
            std::size_t safe = text.size() > guard_ ? text.size() - guard_ : 0;
            out.new_cursor = std::max({cursor, std::min(pos, text.size()), safe});
            out.new_cursor = std::min(out.new_cursor, text.size());
        }
        return out;
    }

private:
    struct OptionMatch {
        bool matched = false;
        bool incomplete = false;
        std::string_view token;
        std::size_t end = 0;
    };

    static bool is_sep(char c) {
        return c == ' ' || c == '\t' || c == ':' || c == '*' || c == '_' || c == '"' ||
               c == '\'' || c == '(' || c == '[';
    }

    // Spacing separators only; never opening brackets, which can begin a
    // free-form expression answer.
    static bool is_space_sep(char c) {
        return c == ' ' || c == '\t' || c == ':' || c == '*' || c == '_';
    }

    OptionMatch match_option(std::string_view text, std::size_t p, bool final) const {
        OptionMatch m;
        std::size_t q = p;
        while (q < text.size() && is_sep(text[q])) ++q;
        std::size_t ff = p;
        while (ff < text.size() && is_space_sep(text[ff])) ++ff;
        if (q >= text.size()) {
            m.incomplete = !final;
            return m;
        }
        // Tolerate a linking "is" between the trigger and the answer
        // ("final answer is B").
        if (!final && text.size() - q < 3 && iequal(text.substr(q), std::string_view("is").substr(0, text.size() - q))) {
            m.incomplete = true;
            return m;
        }
        if (q + 2 < text.size() && iequal(text.substr(q, 2), "is") && is_sep(text[q + 2])) {
            q += 2;
            ff = q;
            while (q < text.size() && is_sep(text[q])) ++q;
            while (ff < text.size() && is_space_sep(text[ff])) ++ff;
            if (q >= text.size()) {
                m.incomplete = !final;
                return m;
            }
        }
        for (const auto& opt : opts_.option_texts) {
            if (q + opt.size() <= text.size()) {
                if (iequal(text.substr(q, opt.size()), opt)) {
                    std::size_t e = q + opt.size();
                    if (e == text.size() && !final) {
                        m.incomplete = true;
                        return m;
                    }
                    if (e == text.size() || !is_alnum(text[e])) {
                        m.matched = true;
                        m.token = text.substr(q, opt.size());
                        m.end = e;
                        return m;
                    }
                }
            } else if (!final && iequal(text.substr(q), opt.substr(0, text.size() - q))) {
                m.incomplete = true;
                return m;
            }
        }
        char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[q])));
        if (opts_.letters.find(c) != std::string::npos) {
            if (q + 1 == text.size() && !final) {
                m.incomplete = true;
                return m;
            }
            if (q + 1 == text.size() || !is_alnum(text[q + 1])) {
                m.matched = true;
                m.token = text.substr(q, 1);
                m.end = q + 1;
                return m;
            }
        }
        // Free-form mode (no configured options): the answer is the rest of
        // the line, captured once the line is complete.
        if (opts_.option_texts.empty() && opts_.letters.empty()) {
            std::size_t line_end = text.find('\n', ff);
            if (line_end == npos) {
                if (!final) {
                    m.incomplete = true;
                    return m;
                }
                line_end = text.size();
            }
            std::size_t e = line_end;
            auto framing = [](char c) {
                return c == ' ' || c == '\t' || c == '\r' || c == '.' || c == ',' || c == ';' ||
                       c == ':' || c == '!' || c == '?' || c == '"' || c == '\'' || c == '*';
            };
            while (e > ff && framing(text[e - 1])) --e;
            if (e > ff) {
                m.matched = true;
                m.token = text.substr(ff, e - ff);
                m.end = e;
                return m;
            }
        }
        return m;
    }

    static constexpr std::string_view kBoxed = "\\boxed{";
    AnswerExtractorOptions opts_;
    std::size_t guard_ = 16;
};

// --------------------------------------------------------------- equations

class EquationExtractor final : public Extractor {
public:
    explicit EquationExtractor(std::vector<long long> inputs) : inputs_(std::move(inputs)) {
        std::sort(inputs_.begin(), inputs_.end());
    }

    std::string id() const override { return "equation"; }

    ScanResult scan(std::string_view text, std::size_t cursor, bool final) const override {
        ScanResult out;
        std::size_t pos = cursor;
        std::optional<std::size_t> park;
        while (pos < text.size()) {
            if (!is_digit(text[pos]) && text[pos] != '(') {
                ++pos;
                continue;
            }
            std::size_t rs = pos;
            std::size_t re = rs;
            while (re < text.size()) {
                std::size_t step = arith_char_len(text, re);
                if (step == 0) break;
                re += step;
            }
            if (re >= text.size() && !final) {
                park = rs;
                break;
            }
            process_run(text, rs, re, out.states);
            pos = re;
        }
        if (park)
            out.new_cursor = std::max(cursor, *park);
        else
            out.new_cursor = text.size();
        return out;
    }

private:
    // Returns the byte length of the arithmetic character at i, or 0.
    static std::size_t arith_char_len(std::string_view text, std::size_t i) {
        char c = text[i];
        if (is_digit(c) || c == '+' || c == '-' || c == '*' || c == '/' || c == '(' ||
            c == ')' || c == '=' || c == ' ' || c == '\t')
            return 1;
        std::string_view rest = text.substr(i);
        if (rest.starts_with("\xC3\x97") || rest.starts_with("\xC3\xB7") ||
            rest.starts_with("\xC2\xB7"))
            return 2;
        if (rest.starts_with("\xE2\x88\x92")) return 3;
        return 0;
    }

    static bool has_operator(std::string_view s) {
        for (std::size_t i = 0; i < s.size();) {
            char c = s[i];
            if (c == '+' || c == '-' || c == '*' || c == '/') return true;
            std::string_view rest = s.substr(i);
            if (rest.starts_with("\xC3\x97") || rest.starts_with("\xC3\xB7") ||
                rest.starts_with("\xC2\xB7") || rest.starts_with("\xE2\x88\x92"))
                return true;
            ++i;
        }
        return false;
    }

    static std::vector<long long> digit_runs(std::string_view s) {
        std::vector<long long> out;
        std::size_t i = 0;
        while (i < s.size()) {
            if (is_digit(s[i])) {
                long long v = 0;
                while (i < s.size() && is_digit(s[i])) v = v * 10 + (s[i++] - '0');
                out.push_back(v);
            } else {
                ++i;
            }
        }
        return out;
    }

    void process_run(std::string_view text, std::size_t rs, std::size_t re,
                     std::vector<ExtractedState>& states) const {
        std::size_t seg_begin = rs;
        while (seg_begin <= re) {
            std::size_t eq = text.find('=', seg_begin);
            std::size_t seg_end = (eq == npos || eq > re) ? re : eq;
            std::size_t a = seg_begin;
            std::size_t b = seg_end;
            while (a < b && (text[a] == ' ' || text[a] == '\t')) ++a;
            while (b > a && (text[b - 1] == ' ' || text[b - 1] == '\t')) --b;
            std::string_view seg = text.substr(a, b - a);
            if (!seg.empty() && has_operator(seg)) {
                auto nums = digit_runs(seg);
                std::sort(nums.begin(), nums.end());
                if (nums == inputs_) {
                    ExtractedState st;
                    st.kind = StateKind::Equation;
                    st.payload = EquationPayload{std::string(seg)};
                    st.span = {a, b};
                    states.push_back(std::move(st));
                    return;
                }
            }
            if (seg_end >= re) break;
            seg_begin = seg_end + 1;
        }
    }

    std::vector<long long> inputs_;
};

// ------------------------------------------------------------- maze blocks

struct BlockOutcome {
    bool parked = false;
    std::size_t end = 0;  // one past the last consumed byte (incl. newline)
};

class MazeExtractor final : public Extractor {
public:
    std::string id() const override { return "maze"; }

    ScanResult scan(std::string_view text, std::size_t cursor, bool final) const override {
        ScanResult out;
        std::size_t pos = cursor;
        while (pos < text.size()) {
            LineView ln = get_line(text, pos);
            if (!ln.complete && !final) break;
            std::string_view t = trim(ln.content);
            if (!t.starts_with(">>>")) {
                pos = ln.next;
                continue;
            }
            std::string_view head = trim(t.substr(3));
            if (istarts_with(head, "locate")) {
                ExtractedState st;
                st.kind = StateKind::MazeLocate;
                MazeLocatePayload payload;
                auto block = consume_locate(text, ln, final, payload, st);
                if (block.parked) break;
                st.payload = std::move(payload);
                st.span = {pos, block.end};
                out.states.push_back(std::move(st));
                pos = block.end;
                continue;
            }
            if (istarts_with(head, "step")) {
                if (!is_move_header(head)) {
                    // STEP blocks of other formats (e.g. PARSE RELATIONSHIPS)
                    pos = ln.next;
                    continue;
                }
                ExtractedState st;
                st.kind = StateKind::MazeStep;
                MazeStepPayload payload;
                parse_step_header(head, payload, st);
                auto block = consume_step_body(text, ln, final, payload, st);
                if (block.parked) break;
                st.payload = std::move(payload);
                st.span = {pos, block.end};
                out.states.push_back(std::move(st));
                pos = block.end;
                continue;
            }
            pos = ln.next;
        }
        out.new_cursor = std::max(cursor, std::min(pos, text.size()));
        if (final) out.new_cursor = text.size();
        return out;
    }

private:
    static bool is_move_header(std::string_view head) {
        return ifind(head, "move", 0) != npos;
    }

    static void note_error(ExtractedState& st, std::string msg) {
        st.parse_failed = true;
        if (st.parse_error.empty()) st.parse_error = std::move(msg);
    }

    static void parse_step_header(std::string_view head, MazeStepPayload& p, ExtractedState& st) {
        FieldParser f(head);
        f.keyword("step");
        if (auto n = f.integer())
            p.index = static_cast<int>(*n);
        else
            note_error(st, "step header has no step number");
        f.lit(':');
        if (!f.keyword("move")) {
            note_error(st, "step header is missing the move description");
            return;
        }
        auto dir_word = f.word();
        if (auto d = parse_direction(dir_word))
            p.move_dir = d;
        else
            note_error(st, "unknown move direction '" + std::string(dir_word) + "'");
        if (!f.keyword("from")) {
            note_error(st, "step header is missing 'from'");
            return;
        }
        if (auto g = f.grid_pos())
            p.from_pos = g;
        else
            note_error(st, "unreadable source position in step header");
        if (!f.keyword("to")) {
            note_error(st, "step header is missing 'to'");
            return;
        }
        if (auto g = f.grid_pos())
            p.to_pos = g;
        else
            note_error(st, "unreadable target position in step header");
    }

    enum class StepKey { None, CurrentPos, PrevDir, CurDir, TurnType, Counts };

    static StepKey classify_step_line(std::string_view content, std::string_view& rest) {
        std::string_view t = strip_bullet(content);
        auto try_key = [&](std::string_view key) {
            if (!istarts_with(t, key)) return false;
            std::string_view r = t.substr(key.size());
            r = trim(r);
            if (!r.empty() && r.front() == ':') r = trim(r.substr(1));
            rest = r;
            return true;
        };
        if (try_key("current position")) return StepKey::CurrentPos;
        if (try_key("previous direction")) return StepKey::PrevDir;
        if (try_key("current direction")) return StepKey::CurDir;
        if (try_key("turn type")) return StepKey::TurnType;
        if (try_key("running count")) return StepKey::Counts;
        return StepKey::None;
    }

    static void parse_step_line(StepKey key, std::string_view rest, MazeStepPayload& p,
                                ExtractedState& st) {
        FieldParser f(rest);
        switch (key) {
            case StepKey::CurrentPos: {
                if (auto g = f.grid_pos())
                    p.current_pos = g;
                else
                    note_error(st, "unreadable current position");
                break;
            }
            case StepKey::PrevDir: {
                p.prev_dir_line = true;
                std::string_view w = trim(rest);
                while (!w.empty() && (w.front() == '[' || w.front() == '(')) w.remove_prefix(1);
                while (!w.empty() && (w.back() == ']' || w.back() == ')')) w.remove_suffix(1);
                w = trim(w);
                if (w.empty() || iequal(w, "none") || iequal(w, "n/a") || w == "-") break;
                if (auto d = parse_direction(w))
                    p.prev_dir = d;
                else
                    note_error(st, "unknown previous direction '" + std::string(w) + "'");
                break;
            }
            case StepKey::CurDir: {
                std::string_view w = trim(rest);
                if (auto d = parse_direction(w))
                    p.cur_dir = d;
                else
                    note_error(st, "unknown current direction '" + std::string(w) + "'");
                break;
            }
            case StepKey::TurnType: {
                FieldParser g(rest);
                std::string tok(g.word());
                std::size_t save = g.i;
                std::string_view second = g.word();
                if (iequal(second, "turn"))
                    tok += "_turn";
                else
                    g.i = save;
                if (auto tt = parse_turn(tok))
                    p.claimed_turn = tt;
                else
                    note_error(st, "unknown turn type '" + std::string(trim(rest)) + "'");
                break;
            }
            case StepKey::Counts: {
                MazeStepPayload::Counts counts;
                bool saw_right = false;
                bool saw_left = false;
                while (true) {
                    auto w = f.word();
                    if (w.empty()) break;
                    f.keyword("turns");
                    if (!f.lit('=') && !f.lit(':')) {
                        note_error(st, "unreadable running count");
                        return;
                    }
                    auto v = f.integer();
                    if (!v) {
                        note_error(st, "running count value is not a number");
                        return;
                    }
                    if (iequal(w, "right")) {
                        counts.right = static_cast<int>(*v);
                        saw_right = true;
                    } else if (iequal(w, "left")) {
                        counts.left = static_cast<int>(*v);
                        saw_left = true;
                    } else if (iequal(w, "total")) {
                        counts.total = static_cast<int>(*v);
                    }
                    if (!f.lit(',') && !f.lit(';')) break;
                }
                if (!saw_right || !saw_left) {
                    note_error(st, "running count is missing Right or Left");
                    return;
                }
                p.counts = counts;
                break;
            }
            case StepKey::None: break;
        }
    }

    static BlockOutcome consume_step_body(std::string_view text, const LineView& header,
                                          bool final, MazeStepPayload& p, ExtractedState& st) {
        BlockOutcome out;
        out.end = header.next;
        std::size_t pos = header.next;
        while (true) {
            if (pos >= text.size()) {
                if (!final) out.parked = true;
                return out;
            }
            LineView ln = get_line(text, pos);
            if (!ln.complete && !final) {
                out.parked = true;
                return out;
            }
            std::string_view rest;
            StepKey key = classify_step_line(ln.content, rest);
            if (key == StepKey::None) return out;
            parse_step_line(key, rest, p, st);
            out.end = ln.next;
            pos = ln.next;
            if (key == StepKey::Counts) return out;
        }
    }

    static BlockOutcome consume_locate(std::string_view text, const LineView& header, bool final,
                                       MazeLocatePayload& p, ExtractedState& st) {
        BlockOutcome out;
        out.end = header.next;
        std::size_t pos = header.next;
        bool saw_s = false;
        bool saw_e = false;
        while (true) {
            if (pos >= text.size()) {
                if (!final) out.parked = true;
                return out;
            }
            LineView ln = get_line(text, pos);
            if (!ln.complete && !final) {
                out.parked = true;
                return out;
            }
            std::string_view t = strip_bullet(ln.content);
            bool is_s = istarts_with(t, "s position") || istarts_with(t, "start position");
            bool is_e = istarts_with(t, "e position") || istarts_with(t, "exit position") ||
                        istarts_with(t, "end position");
            if (!is_s && !is_e) return out;
            std::size_t colon = t.find(':');
            std::string_view rest = colon == npos ? std::string_view{} : trim(t.substr(colon + 1));
            FieldParser f(rest);
            auto g = f.grid_pos();
            if (!g) note_error(st, is_s ? "unreadable S position" : "unreadable E position");
            if (is_s) {
                p.s_pos = g;
                saw_s = true;
            } else {
                p.e_pos = g;
                saw_e = true;
            }
            out.end = ln.next;
            pos = ln.next;
            if (saw_s && saw_e) return out;
        }
    }
};

// ---------------------------------------------------------- spatial blocks

struct DirMatch {
    std::size_t pos = 0;
    std::size_t len = 0;
    Dir8 dir = Dir8::NW;
};

const std::array<std::pair<std::string_view, Dir8>, 12> kDirWords = {{
    {"northwest", Dir8::NW},
    {"northeast", Dir8::NE},
    {"southwest", Dir8::SW},
    {"southeast", Dir8::SE},
    {"north-west", Dir8::NW},
    {"north-east", Dir8::NE},
    {"south-west", Dir8::SW},
    {"south-east", Dir8::SE},
    {"north", Dir8::N},
    {"south", Dir8::S},
    {"east", Dir8::E},
    {"west", Dir8::W},
}};

std::vector<DirMatch> find_direction_words(std::string_view line) {
    std::vector<DirMatch> all;
    for (const auto& [word, dir] : kDirWords) {
        std::size_t from = 0;
        while (true) {
            std::size_t q = ifind(line, word, from);
            if (q == npos) break;
            bool left_ok = q == 0 || !is_alpha(line[q - 1]);
            std::size_t e = q + word.size();
            bool right_ok = e >= line.size() || !is_alpha(line[e]);
            if (left_ok && right_ok) all.push_back({q, word.size(), dir});
            from = q + 1;
        }
    }
    std::sort(all.begin(), all.end(), [](const DirMatch& a, const DirMatch& b) {
        if (a.pos != b.pos) return a.pos < b.pos;
        return a.len > b.len;
    });
    std::vector<DirMatch> keep;
    for (const auto& m : all) {
        if (!keep.empty() && m.pos < keep.back().pos + keep.back().len) continue;
        keep.push_back(m);
    }
    return keep;
}

// strips trailing emphasis/quote characters but not letters
std::string_view rstrip_decor(std::string_view s) {
    while (!s.empty() && (is_space(s.back()) || s.back() == '*' || s.back() == '_' ||
                          s.back() == '"' || s.back() == '\'' || s.back() == '`'))
        s.remove_suffix(1);
    return s;
}

bool strip_trailing_word(std::string_view& s, std::string_view word) {
    std::string_view t = rstrip_decor(s);
    if (t.size() < word.size()) return false;
    std::string_view tail = t.substr(t.size() - word.size());
    if (!iequal(tail, word)) return false;
    std::size_t before = t.size() - word.size();
    if (before > 0 && is_alpha(t[before - 1])) return false;
    s = t.substr(0, before);
    return true;
}

class SpatialExtractor final : public Extractor {
public:
    explicit SpatialExtractor(std::vector<std::string> entities)
        : entities_(std::move(entities)) {
        std::sort(entities_.begin(), entities_.end(),
                  [](const auto& a, const auto& b) { return a.size() > b.size(); });
    }

    std::string id() const override { return "spatial"; }

    ScanResult scan(std::string_view text, std::size_t cursor, bool final) const override {
        ScanResult out;
        std::size_t pos = cursor;
        bool in_givens = context_is_givens(text, cursor);
        while (pos < text.size()) {
            LineView ln = get_line(text, pos);
            if (!ln.complete && !final) break;
            std::string_view t = trim(ln.content);
            if (t.starts_with(">>>")) {
                std::string_view head = trim(t.substr(3));
                if (is_givens_header(head)) {
                    ExtractedState st;
                    st.kind = StateKind::SpatialRelations;
                    SpatialRelationsPayload payload;
                    auto block = consume_relations(text, ln, final, payload, st);
                    if (block.parked) break;
                    st.payload = std::move(payload);
                    st.span = {pos, block.end};
                    out.states.push_back(std::move(st));
                    in_givens = true;  // trailing relation restatements are not conclusions
                    pos = block.end;
                    continue;
                }
                in_givens = false;
                pos = ln.next;
                continue;
            }
            if (!in_givens) {
                if (auto c = parse_conclusion_line(t)) {
                    ExtractedState st;
                    st.kind = StateKind::SpatialConclusion;
                    st.payload = std::move(*c);
                    st.span = {pos, ln.next};
                    out.states.push_back(std::move(st));
                }
            }
            pos = ln.next;
        }
        out.new_cursor = std::max(cursor, std::min(pos, text.size()));
        if (final) out.new_cursor = text.size();
        return out;
    }

private:
    static bool is_givens_header(std::string_view head) {
        if (ifind(head, "parse", 0) != npos) return true;
        FieldParser f(head);
        f.keyword("step");
        auto n = f.integer();
        return n && *n == 1;
    }

    // Determines whether `at` sits under a parse-relationships header by
    // looking backward for the nearest block marker. Text before the cursor
    // is immutable, so this is deterministic across chunkings.
    static bool context_is_givens(std::string_view text, std::size_t at) {
        std::size_t search = at;
        while (search > 0) {
            std::size_t h = text.rfind(">>>", search - 1);
            if (h == npos) return false;
            std::size_t ls = text.rfind('\n', h);
            ls = (ls == npos) ? 0 : ls + 1;
            if (trim(text.substr(ls, h - ls)).empty()) {
                std::size_t he = text.find('\n', h);
                if (he == npos) he = text.size();
                return is_givens_header(trim(text.substr(h + 3, he - h - 3)));
            }
            search = h;
        }
        return false;
    }

    enum class RelLine { Ok, BadDirection, NotARelation };

    static RelLine classify_relation_line(std::string_view content, DiagRelation& rel,
                                          std::string& err) {
        std::string_view t = strip_quotes(strip_bullet(content));
        if (t.empty()) return RelLine::NotARelation;
        std::size_t is_at = ifind(t, " is ", 0);
        if (is_at == npos) return RelLine::NotARelation;
        std::string_view subject = trim(t.substr(0, is_at));
        FieldParser f(t.substr(is_at + 4));
        f.keyword("positioned") || f.keyword("located");
        std::size_t save = f.i;
        if (f.keyword("to") || f.keyword("in") || f.keyword("at") || f.keyword("on")) {
            if (!f.keyword("the")) f.i = save;
        }
        auto dir_word = f.word();
        if (dir_word.empty()) return RelLine::NotARelation;
        if (!f.keyword("of")) return RelLine::NotARelation;
        std::string_view object =
            strip_trailing_punct(strip_leading_article(trim(f.s.substr(f.i))));
        if (subject.empty() || object.empty()) return RelLine::NotARelation;
        auto d8 = parse_dir8(dir_word);
        if (!d8) {
            err = "unknown direction word '" + std::string(dir_word) + "'";
            return RelLine::BadDirection;
        }
        if (!is_diagonal(*d8)) {
            err = "relation uses a non-diagonal direction '" + std::string(dir_word) + "'";
            return RelLine::BadDirection;
        }
        rel.subject = std::string(strip_leading_article(strip_quotes(subject)));
        rel.dir = to_diag(*d8);
        rel.object = std::string(strip_quotes(object));
        return RelLine::Ok;
    }

    static BlockOutcome consume_relations(std::string_view text, const LineView& header,
                                          bool final, SpatialRelationsPayload& p,
                                          ExtractedState& st) {
        BlockOutcome out;
        out.end = header.next;
        std::size_t pos = header.next;
        while (true) {
            if (pos >= text.size()) {
                if (!final) out.parked = true;
                return out;
            }
            LineView ln = get_line(text, pos);
            if (!ln.complete && !final) {
                out.parked = true;
                return out;
            }
            DiagRelation rel;
            std::string err;
            RelLine kind = classify_relation_line(ln.content, rel, err);
            if (kind == RelLine::NotARelation) return out;
            if (kind == RelLine::BadDirection) {
                st.parse_failed = true;
                if (st.parse_error.empty()) st.parse_error = err;
            } else {
                p.relations.push_back(std::move(rel));
            }
            out.end = ln.next;
            pos = ln.next;
        }
    }

    std::optional<SpatialConclusionPayload> parse_conclusion_line(std::string_view line) const {
        auto matches = find_direction_words(line);
        if (matches.empty()) return std::nullopt;
        const DirMatch& m = matches.back();
        // left context must read "<subject> is [to the]"
        std::string_view left = line.substr(0, m.pos);
        std::string_view work = rstrip_decor(left);
        if (strip_trailing_word(work, "the")) {
            if (!strip_trailing_word(work, "to") && !strip_trailing_word(work, "in") &&
                !strip_trailing_word(work, "at") && !strip_trailing_word(work, "on"))
                return std::nullopt;
        }
        strip_trailing_word(work, "directly") || strip_trailing_word(work, "just") ||
            strip_trailing_word(work, "immediately");
        if (!strip_trailing_word(work, "is") && !strip_trailing_word(work, "are") &&
            !strip_trailing_word(work, "lies") && !strip_trailing_word(work, "was") &&
            !strip_trailing_word(work, "sits"))
            return std::nullopt;
        std::string_view subj = work;
        std::size_t cut = subj.find_last_of(":\";(,>.");
        if (cut != npos) subj = subj.substr(cut + 1);
        subj = strip_leading_article(strip_quotes(strip_bullet(subj)));
        if (istarts_with(subj, "that ")) subj = trim(subj.substr(5));
        // right context must read "of <object>"
        std::size_t q = m.pos + m.len;
        while (q < line.size() && (line[q] == ' ' || line[q] == '*' || line[q] == '_' ||
                                   line[q] == '"' || line[q] == '\''))
            ++q;
        FieldParser f(line.substr(q));
        if (!f.keyword("of")) return std::nullopt;
        std::string_view obj = trim(f.s.substr(f.i));
        std::size_t stop = obj.find_first_of(",;:()!?\"");
        if (stop != npos) obj = obj.substr(0, stop);
        obj = strip_trailing_punct(strip_leading_article(obj));
        std::string subject = resolve_entity_suffix(subj);
        std::string object = resolve_entity_prefix(obj);
        if (subject.empty() || object.empty()) return std::nullopt;
        SpatialConclusionPayload out;
        out.subject = std::move(subject);
        out.dir = m.dir;
        out.object = std::move(object);
        return out;
    }

    std::string resolve_entity_suffix(std::string_view raw) const {
        for (const auto& e : entities_) {
            if (raw.size() >= e.size() && iequal(raw.substr(raw.size() - e.size()), e))
                return e;
        }
        return std::string(trim(raw));
    }

    std::string resolve_entity_prefix(std::string_view raw) const {
        for (const auto& e : entities_) {
            if (raw.size() >= e.size() && iequal(raw.substr(0, e.size()), e)) {
                if (raw.size() == e.size() || !is_alnum(raw[e.size()])) return e;
            }
        }
        return std::string(trim(raw));
    }

    std::vector<std::string> entities_;
};

// -------------------------------------------------------------- artifacts

class ArtifactExtractor final : public Extractor {
public:
    explicit ArtifactExtractor(std::vector<ArtifactFamily> families)
        : families_(std::move(families)) {
        for (auto& fam : families_)
            for (auto& p : fam.phrases) {
                p = lower(p);
                guard_ = std::max(guard_, p.size());
            }
    }

    std::string id() const override { return "artifact"; }

    ScanResult scan(std::string_view text, std::size_t cursor, bool final) const override {
        ScanResult out;
        std::size_t pos = cursor;
        std::optional<std::size_t> park;
        while (true) {
            std::size_t best = npos;
            std::size_t best_len = 0;
            const ArtifactFamily* best_fam = nullptr;
            for (const auto& fam : families_) {
                for (const auto& p : fam.phrases) {
                    std::size_t t = ifind(text, p, pos);
                    if (t != npos && (t < best || (t == best && p.size() > best_len))) {
                        best = t;
                        best_len = p.size();
                        best_fam = &fam;
                    }
                }
            }
            if (best == npos) break;
            std::size_t q = best + best_len;
            while (q < text.size() &&
                   (text[q] == ' ' || text[q] == '\t' || text[q] == ':' || text[q] == '\r' ||
                    text[q] == '\n'))
                ++q;
            if (q >= text.size()) {
                if (!final) {
                    park = best;
                    break;
                }
                pos = best + best_len;
                continue;
            }
            if (!text.substr(q).starts_with("```")) {
                pos = best + best_len;
                continue;
            }
            std::size_t fence_nl = text.find('\n', q + 3);
            if (fence_nl == npos) {
                if (!final) {
                    park = best;
                    break;
                }
                pos = best + best_len;
                continue;
            }
            std::size_t close = text.find("\n```", fence_nl);
            if (close == npos) {
                if (!final) {
                    park = best;
                    break;
                }
                pos = best + best_len;
                continue;
            }
            std::size_t body_begin = fence_nl + 1;
            std::size_t end = close + 4;
            if (end < text.size() && text[end] == '\n') ++end;
            ExtractedState st;
            st.kind = StateKind::Artifact;
            st.payload =
                ArtifactPayload{best_fam->name, std::string(text.substr(body_begin, close + 1 - body_begin))};
            st.span = {best, end};
            out.states.push_back(std::move(st));
            pos = end;
        }
        if (park) {
            out.new_cursor = std::max(cursor, *park);
        } else if (final) {
            out.new_cursor = text.size();
        } else {
            std::size_t safe = text.size() > guard_ ? text.size() - guard_ : 0;
            out.new_cursor = std::max({cursor, std::min(pos, text.size()), safe});
            out.new_cursor = std::min(out.new_cursor, text.size());
        }
        return out;
    }

private:
    std::vector<ArtifactFamily> families_;
    std::size_t guard_ = 8;
};

}  // namespace

std::unique_ptr<Extractor> make_answer_extractor(AnswerExtractorOptions opts) {
    return std::make_unique<AnswerExtractor>(std::move(opts));
}

std::unique_ptr<Extractor> make_equation_extractor(std::vector<long long> inputs) {
    return std::make_unique<EquationExtractor>(std::move(inputs));
}

std::unique_ptr<Extractor> make_maze_extractor() { return std::make_unique<MazeExtractor>(); }

std::unique_ptr<Extractor> make_spatial_extractor(std::vector<std::string> entities) {
    return std::make_unique<SpatialExtractor>(std::move(entities));
}

std::unique_ptr<Extractor> make_artifact_extractor(std::vector<ArtifactFamily> families) {
    return std::make_unique<ArtifactExtractor>(std::move(families));
}

std::vector<ExtractedState> scan_for_states(ReasoningTrace& trace, const Extractor& ex,
                                            bool final) {
    auto res = ex.scan(trace.full_text(), trace.cursor(), final);
    trace.set_cursor(res.new_cursor);
    return res.states;
}

}  // namespace interwhen
