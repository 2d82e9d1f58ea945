#include "doctest.h"

#include <algorithm>
#include <array>
#include <random>

#include "interwhen/game24.hpp"

using namespace interwhen;

static Rational eval(const std::string& text) {
    ParseResult p = parse_expression(text);
    REQUIRE(p.expr != nullptr);
    auto v = evaluate_exact(*p.expr);
    REQUIRE(v.has_value());
    return *v;
}

TEST_CASE("rationals normalize") {
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(Rational(-2, -4) == Rational(1, 2));
    CHECK(Rational(3, -9) == Rational(-1, 3));
    CHECK(Rational(0, 7) == Rational(0, 1));
    CHECK(to_string(Rational(22, 7)) == "22/7");
    CHECK(to_string(Rational(6, 3)) == "2");
}

TEST_CASE("rational arithmetic is exact") {
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(1, 2) - Rational(1, 3) == Rational(1, 6));
    CHECK(Rational(2, 3) * Rational(9, 4) == Rational(3, 2));
    CHECK(checked_div(Rational(1), Rational(3)) == Rational(1, 3));
    CHECK(!checked_div(Rational(5), Rational(0)).has_value());
}

TEST_CASE("parser precedence and associativity") {
    CHECK(eval("2+3*4") == Rational(14));
    CHECK(eval("(2+3)*4") == Rational(20));
    CHECK(eval("8-3-2") == Rational(3));
    CHECK(eval("24/4/2") == Rational(3));
    CHECK(eval("8/(3-8/3)") == Rational(24));
    CHECK(eval(" 12 * 2 ") == Rational(24));
}

TEST_CASE("parser accepts typographic operators") {
    CHECK(eval("6×4") == Rational(24));
    CHECK(eval("48÷2") == Rational(24));
    CHECK(eval("30−6") == Rational(24));
}

TEST_CASE("parser rejects malformed input") {
    CHECK(parse_expression("").expr == nullptr);
    CHECK(parse_expression("-3+4").expr == nullptr);
    CHECK(parse_expression("2+*3").expr == nullptr);
    CHECK(parse_expression("(2+3").expr == nullptr);
    CHECK(parse_expression("2+3)").expr == nullptr);
    CHECK(parse_expression("two+three").expr == nullptr);
    ParseResult p = parse_expression("1 + ");
    CHECK(p.expr == nullptr);
    CHECK(!p.error.empty());
}

TEST_CASE("collect_leaves returns the operand multiset") {
    ParseResult p = parse_expression("(8/(3-8/3))");
    REQUIRE(p.expr != nullptr);
    auto leaves = collect_leaves(*p.expr);
    std::sort(leaves.begin(), leaves.end());
    CHECK(leaves == std::vector<long long>{3, 3, 8, 8});
}

TEST_CASE("verify_game24 checks parse, multiset, zero division and value") {
    std::vector<long long> nums{4, 6, 8, 2};

    CHECK(verify_game24(nums, "8*6/(4-2)").pass);
    CHECK(verify_game24(nums, "8 * 6 / (4 - 2)").pass);

    CHECK(!verify_game24(nums, "(6-4)*(8+2)").pass);   // right numbers, value 20
    CHECK(!verify_game24(nums, "6*4*(8/2-3)").pass);   // 3 is not an input
    CHECK(!verify_game24(nums, "6*4+8-2*2").pass);     // five operands
    CHECK(!verify_game24(nums, "8*6/(4-2)+0*1").pass); // extra numbers

    Verdict dz = verify_game24({1, 1, 5, 5}, "5/(1-1)+5");
    CHECK(!dz.pass);
    CHECK(dz.feedback.has_value());

    Verdict off = verify_game24(nums, "8+6+4+2");
    CHECK(!off.pass);
    CHECK(off.feedback.has_value());

    Verdict junk = verify_game24(nums, "8*6/)2");
    CHECK(!junk.pass);
    CHECK(junk.feedback.has_value());
}

TEST_CASE("solve24 frozen instances") {
    auto w = solve24({3, 3, 8, 8});
    REQUIRE(w.has_value());
    CHECK(verify_game24({3, 3, 8, 8}, *w).pass);

    CHECK(!solve24({1, 1, 1, 1}).has_value());
    CHECK(solve24({4, 6, 1, 1}).has_value());
    CHECK(solve24({1, 2, 3, 4}).has_value());
    CHECK(!solve24({1, 1, 1, 2}).has_value());

    auto other_target = solve24({2, 3, 5, 7}, 10);
    REQUIRE(other_target.has_value());
    CHECK(verify_game24({2, 3, 5, 7}, *other_target, 10).pass);
}

TEST_CASE("solve24 witnesses verify over random tuples") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long long> dist(1, 13);
    int solvable = 0;
    for (int i = 0; i < 120; ++i) {
        std::array<long long, 4> nums{dist(rng), dist(rng), dist(rng), dist(rng)};
        auto w = solve24(nums);
        if (!w) continue;
        ++solvable;
        Verdict v = verify_game24({nums.begin(), nums.end()}, *w);
        CHECK(v.pass);
    }
    CHECK(solvable > 60);
}
