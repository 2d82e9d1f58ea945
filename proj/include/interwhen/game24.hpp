#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "interwhen/trace.hpp"

namespace interwhen {

// Exact rational arithmetic. Always normalized: den > 0, gcd(|num|, den) == 1.
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d = 1);

    bool operator==(const Rational&) const = default;
    bool is_integer() const { return den == 1; }
};

Rational operator+(Rational a, Rational b);
Rational operator-(Rational a, Rational b);
Rational operator*(Rational a, Rational b);
std::optional<Rational> checked_div(Rational a, Rational b);
std::string to_string(const Rational& r);

struct Expr {
    char op = 0;  // 0 for a leaf, otherwise one of + - * /
    long long value = 0;
    std::unique_ptr<Expr> lhs;
    std::unique_ptr<Expr> rhs;
};

struct ParseResult {
    std::unique_ptr<Expr> expr;  // null on failure
    std::string error;
    std::size_t error_pos = 0;
};

// Recursive-descent parser for integer arithmetic. Multiplication and
// division bind tighter than addition and subtraction; same-level operators
// associate left. Accepts the ASCII operators plus the typographic
// equivalents for multiply, divide and minus. Unary minus is rejected.
ParseResult parse_expression(std::string_view text);

// Null result means a division by zero occurred somewhere in the tree.
std::optional<Rational> evaluate_exact(const Expr& e);

std::vector<long long> collect_leaves(const Expr& e);

// Checks that `expr_text` parses, uses exactly the given numbers (as a
// multiset), avoids division by zero, and evaluates to `target`. The verdict
// carries actionable feedback on the first failed check.
Verdict verify_game24(const std::vector<long long>& inputs, std::string_view expr_text,
                      long long target = 24);

// Exhaustive search over all orderings of the four numbers, all operator
// assignments, and all five parenthesization shapes. Returns a witness
// expression when one reaches the target, otherwise nullopt.
std::optional<std::string> solve24(const std::array<long long, 4>& nums, long long target = 24);

}  // namespace interwhen
