#include "interwhen/game24.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

namespace interwhen {

Rational::Rational(long long n, long long d) : num(n), den(d) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (num == 0) den = 1;
}

Rational operator+(Rational a, Rational b) {
    return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
}

Rational operator-(Rational a, Rational b) {
    return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
}

Rational operator*(Rational a, Rational b) { return Rational(a.num * b.num, a.den * b.den); }

std::optional<Rational> checked_div(Rational a, Rational b) {
    if (b.num == 0) return std::nullopt;
    return Rational(a.num * b.den, a.den * b.num);
}

std::string to_string(const Rational& r) {
    if (r.den == 1) return std::to_string(r.num);
    return std::to_string(r.num) + "/" + std::to_string(r.den);
}

namespace {

enum class TokKind { Int, Op, LParen, RParen, End, Bad };

struct Token {
    TokKind kind = TokKind::End;
    char op = 0;
    long long value = 0;
    std::size_t pos = 0;
};

struct Lexer {
    std::string_view text;
    std::size_t i = 0;
    Token cur;

    explicit Lexer(std::string_view t) : text(t) { advance(); }

    void advance() {
        while (i < text.size() &&
               std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        cur.pos = i;
        if (i >= text.size()) {
            cur.kind = TokKind::End;
            return;
        }
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isdigit(c)) {
            long long v = 0;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                v = v * 10 + (text[i] - '0');
                ++i;
            }
            cur.kind = TokKind::Int;
            cur.value = v;
            return;
        }
        // Typographic operators arrive as multi-byte UTF-8 sequences.
        if (text.substr(i).starts_with("\xC3\x97")) {  // multiplication sign
            cur = {TokKind::Op, '*', 0, cur.pos};
            i += 2;
            return;
        }
        if (text.substr(i).starts_with("\xC3\xB7")) {  // division sign
            cur = {TokKind::Op, '/', 0, cur.pos};
            i += 2;
            return;
        }
        if (text.substr(i).starts_with("\xE2\x88\x92")) {  // minus sign
            cur = {TokKind::Op, '-', 0, cur.pos};
            i += 3;
            return;
        }
        if (text.substr(i).starts_with("\xC2\xB7")) {  // middle dot
            cur = {TokKind::Op, '*', 0, cur.pos};
            i += 2;
            return;
        }
        switch (c) {
            case '+':
            case '-':
            case '*':
            case '/':
                cur = {TokKind::Op, static_cast<char>(c), 0, cur.pos};
                ++i;
                return;
            case 'x':
            case 'X':
                cur = {TokKind::Op, '*', 0, cur.pos};
                ++i;
                return;
            case '(':
                cur = {TokKind::LParen, 0, 0, cur.pos};
                ++i;
                return;
            case ')':
                cur = {TokKind::RParen, 0, 0, cur.pos};
                ++i;
                return;
            default:
                cur = {TokKind::Bad, 0, 0, cur.pos};
                return;
        }
    }
};

struct Parser {
    Lexer lex;
    std::string error;
    std::size_t error_pos = 0;

    explicit Parser(std::string_view t) : lex(t) {}

    std::unique_ptr<Expr> fail(std::string msg) {
        if (error.empty()) {
            error = std::move(msg);
            error_pos = lex.cur.pos;
        }
        return nullptr;
    }

    std::unique_ptr<Expr> parse_factor() {
        if (lex.cur.kind == TokKind::Int) {
            auto e = std::make_unique<Expr>();
            e->value = lex.cur.value;
            lex.advance();
            return e;
        }
        if (lex.cur.kind == TokKind::LParen) {
            lex.advance();
            auto inner = parse_sum();
            if (!inner) return nullptr;
            if (lex.cur.kind != TokKind::RParen) return fail("missing closing parenthesis");
            lex.advance();
            return inner;
        }
        return fail("expected a number or '('");
    }

    std::unique_ptr<Expr> parse_product() {
        auto lhs = parse_factor();
        if (!lhs) return nullptr;
        while (lex.cur.kind == TokKind::Op && (lex.cur.op == '*' || lex.cur.op == '/')) {
            char op = lex.cur.op;
            lex.advance();
            auto rhs = parse_factor();
            if (!rhs) return nullptr;
            auto node = std::make_unique<Expr>();
            node->op = op;
            node->lhs = std::move(lhs);
            node->rhs = std::move(rhs);
            lhs = std::move(node);
        }
        return lhs;
    }

    std::unique_ptr<Expr> parse_sum() {
        auto lhs = parse_product();
        if (!lhs) return nullptr;
        while (lex.cur.kind == TokKind::Op && (lex.cur.op == '+' || lex.cur.op == '-')) {
            char op = lex.cur.op;
            lex.advance();
            auto rhs = parse_product();
            if (!rhs) return nullptr;
            auto node = std::make_unique<Expr>();
            node->op = op;
            node->lhs = std::move(lhs);
            node->rhs = std::move(rhs);
            lhs = std::move(node);
        }
        return lhs;
    }
};

}  // namespace

ParseResult parse_expression(std::string_view text) {
    Parser p(text);
    auto e = p.parse_sum();
    ParseResult out;
    if (!e) {
        out.error = p.error;
        out.error_pos = p.error_pos;
        return out;
    }
    if (p.lex.cur.kind != TokKind::End) {
        out.error = "unexpected trailing input";
        out.error_pos = p.lex.cur.pos;
        return out;
    }
    out.expr = std::move(e);
    return out;
}

std::optional<Rational> evaluate_exact(const Expr& e) {
    if (e.op == 0) return Rational(e.value);
    auto l = evaluate_exact(*e.lhs);
    if (!l) return std::nullopt;
    auto r = evaluate_exact(*e.rhs);
    if (!r) return std::nullopt;
    switch (e.op) {
        case '+': return *l + *r;
        case '-': return *l - *r;
        case '*': return *l * *r;
        case '/': return checked_div(*l, *r);
    }
    return std::nullopt;
}

namespace {

void collect_leaves_into(const Expr& e, std::vector<long long>& out) {
    if (e.op == 0) {
        out.push_back(e.value);
        return;
    }
    collect_leaves_into(*e.lhs, out);
    collect_leaves_into(*e.rhs, out);
}

std::string list_numbers(std::vector<long long> v) {
    std::sort(v.begin(), v.end());
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(v[i]);
    }
    out += "]";
    return out;
}

}  // namespace

std::vector<long long> collect_leaves(const Expr& e) {
    std::vector<long long> out;
    collect_leaves_into(e, out);
    return out;
}

Verdict verify_game24(const std::vector<long long>& inputs, std::string_view expr_text,
                      long long target) {
    Verdict v;
    auto parsed = parse_expression(expr_text);
    if (!parsed.expr) {
        v.pass = false;
        v.feedback = "the equation could not be read (" + parsed.error + ")";
        return v;
    }
    auto used = collect_leaves(*parsed.expr);
    auto want = inputs;
    auto used_sorted = used;
    std::sort(used_sorted.begin(), used_sorted.end());
    std::sort(want.begin(), want.end());
    if (used_sorted != want) {
        v.pass = false;
        v.feedback = "the equation uses the numbers " + list_numbers(used) +
                     " but must use each of " + list_numbers(inputs) + " exactly once";
        return v;
    }
    auto value = evaluate_exact(*parsed.expr);
    if (!value) {
        v.pass = false;
        v.feedback = "the equation divides by zero";
        return v;
    }
    if (!(*value == Rational(target))) {
        v.pass = false;
        v.feedback =
            "the equation evaluates to " + to_string(*value) + ", not " + std::to_string(target);
        return v;
    }
    v.pass = true;
    return v;
}

namespace {

struct Cand {
    Rational value;
    std::string text;
    bool composite = false;
};

std::optional<Cand> combine(const Cand& a, char op, const Cand& b) {
    Rational value;
    switch (op) {
        case '+': value = a.value + b.value; break;
        case '-': value = a.value - b.value; break;
        case '*': value = a.value * b.value; break;
        case '/': {
            auto q = checked_div(a.value, b.value);
            if (!q) return std::nullopt;
            value = *q;
            break;
        }
    }
    auto wrap = [](const Cand& c) { return c.composite ? "(" + c.text + ")" : c.text; };
    return Cand{value, wrap(a) + op + wrap(b), true};
}

}  // namespace

std::optional<std::string> solve24(const std::array<long long, 4>& nums, long long target) {
    std::array<long long, 4> p = nums;
    std::sort(p.begin(), p.end());
    const char ops[] = {'+', '-', '*', '/'};
    const Rational goal(target);
    do {
        Cand a{Rational(p[0]), std::to_string(p[0]), false};
        Cand b{Rational(p[1]), std::to_string(p[1]), false};
        Cand c{Rational(p[2]), std::to_string(p[2]), false};
        Cand d{Rational(p[3]), std::to_string(p[3]), false};
        for (char o1 : ops)
            for (char o2 : ops)
                for (char o3 : ops) {
                    // ((a b) c) d
                    if (auto ab = combine(a, o1, b))
                        if (auto abc = combine(*ab, o2, c))
                            if (auto all = combine(*abc, o3, d); all && all->value == goal)
                                return all->text;
                    // (a (b c)) d
                    if (auto bc = combine(b, o2, c))
                        if (auto abc = combine(a, o1, *bc))
                            if (auto all = combine(*abc, o3, d); all && all->value == goal)
                                return all->text;
                    // (a b) (c d)
                    if (auto ab = combine(a, o1, b))
                        if (auto cd = combine(c, o3, d))
                            if (auto all = combine(*ab, o2, *cd); all && all->value == goal)
                                return all->text;
                    // a ((b c) d)
                    if (auto bc = combine(b, o2, c))
                        if (auto bcd = combine(*bc, o3, d))
                            if (auto all = combine(a, o1, *bcd); all && all->value == goal)
                                return all->text;
                    // a (b (c d))
                    if (auto cd = combine(c, o3, d))
                        if (auto bcd = combine(b, o2, *cd))
                            if (auto all = combine(a, o1, *bcd); all && all->value == goal)
                                return all->text;
                }
    } while (std::next_permutation(p.begin(), p.end()));
    return std::nullopt;
}

}  // namespace interwhen
