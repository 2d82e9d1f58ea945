#include "doctest.h"

#include "interwhen/trace.hpp"

using namespace interwhen;

TEST_CASE("trace accumulates model tokens") {
    ReasoningTrace t("prompt");
    t.append_model_token("Let ");
    t.append_model_token("me ");
    t.append_model_token("think.");
    CHECK(t.prompt() == "prompt");
    CHECK(t.full_text() == "Let me think.");
    CHECK(t.model_text() == "Let me think.");
    CHECK(t.model_tokens() == 3);
    CHECK(t.injected_tokens() == 0);
    CHECK(t.text_length() == 13);
    CHECK(t.segments().size() == 1);
}

TEST_CASE("interventions split segments and count words") {
    ReasoningTrace t;
    t.append_model_token("abc ");
    t.append_intervention("Wait, that cell is a wall.");
    t.append_model_token("def");
    CHECK(t.segments().size() == 3);
    CHECK(t.full_text() == "abc Wait, that cell is a wall.def");
    CHECK(t.model_text() == "abc def");
    CHECK(t.model_tokens() == 2);
    CHECK(t.injected_tokens() == 6);
}

TEST_CASE("injected token estimate is whitespace word count") {
    CHECK(estimate_injected_tokens("") == 0);
    CHECK(estimate_injected_tokens("   ") == 0);
    CHECK(estimate_injected_tokens("one") == 1);
    CHECK(estimate_injected_tokens("Wait, the count is wrong") == 5);
    CHECK(estimate_injected_tokens("  a\nb\tc  ") == 3);
}

TEST_CASE("truncation keeps consumed token counts") {
    ReasoningTrace t;
    t.append_model_token("0123");
    t.append_model_token("4567");
    t.append_model_token("89");
    REQUIRE(t.text_length() == 10);
    t.truncate_model_text(6);
    CHECK(t.full_text() == "012345");
    CHECK(t.model_tokens() == 3);
    CHECK(t.text_length() == 6);

    SUBCASE("dropping whole segments folds their counts backward") {
        t.append_model_token("AB");
        t.truncate_model_text(6);
        CHECK(t.full_text() == "012345");
        CHECK(t.model_tokens() == 4);
    }
}

TEST_CASE("truncation refuses to cut an intervention") {
    ReasoningTrace t;
    t.append_model_token("abcd");
    t.append_intervention("Wait, no.");
    CHECK_THROWS_AS(t.truncate_model_text(6), ContractViolation);
    CHECK_THROWS_AS(t.truncate_model_text(t.text_length() + 1), ContractViolation);
    t.truncate_model_text(t.text_length());
    CHECK(t.full_text() == "abcdWait, no.");
}

TEST_CASE("cursor moves forward and survives truncation") {
    ReasoningTrace t;
    t.append_model_token("0123456789");
    t.set_cursor(7);
    CHECK(t.cursor() == 7);
    CHECK_THROWS_AS(t.set_cursor(11), ContractViolation);
    t.truncate_model_text(4);
    CHECK(t.cursor() == 4);
}

TEST_CASE("halted trace rejects further text") {
    ReasoningTrace t;
    t.append_model_token("x");
    t.freeze();
    CHECK(t.halted());
    CHECK_THROWS_AS(t.append_model_token("y"), ContractViolation);
    CHECK_THROWS_AS(t.append_intervention("z"), ContractViolation);
}

TEST_CASE("feedback injection truncates after the state and prefixes") {
    ReasoningTrace t;
    t.append_model_token("step one is fine. ");
    t.append_model_token("step two is broken. ");
    t.append_model_token("and this text depends on it");
    Span state{18, 38};

    InterventionAction a;
    a.kind = ActionKind::InjectText;
    a.payload = "the move hits a wall";
    apply_intervention(t, a, state);

    CHECK(t.full_text() ==
          "step one is fine. step two is broken. Wait, the move hits a wall");
    CHECK(t.model_tokens() == 3);
    CHECK(t.segments().back().origin == SegmentOrigin::Intervention);

    SUBCASE("payloads already carrying the prefix are not doubled") {
        ReasoningTrace u;
        u.append_model_token("text");
        InterventionAction b;
        b.kind = ActionKind::InjectText;
        b.payload = "Wait, already prefixed";
        apply_intervention(u, b, Span{0, 4});
        CHECK(u.full_text() == "textWait, already prefixed");
    }
}

TEST_CASE("tail insertion keeps the whole trace") {
    ReasoningTrace t;
    t.append_model_token("everything stays");
    InterventionAction a;
    a.kind = ActionKind::InjectText;
    a.payload = "a remark";
    a.insert_at = InsertAt::AtTail;
    apply_intervention(t, a, Span{0, 4});
    CHECK(t.full_text() == "everything staysWait, a remark");
}

TEST_CASE("end-think injection closes the think region once") {
    ReasoningTrace t;
    t.append_model_token("reasoning reasoning");
    InterventionAction a;
    a.kind = ActionKind::InjectEndThink;
    apply_intervention(t, a, Span{9, 9});
    CHECK(t.think_closed());
    CHECK(t.full_text() == "reasoning</think>\nThe final answer is");
    CHECK_THROWS_AS(apply_intervention(t, a, Span{0, 0}), ContractViolation);
}

TEST_CASE("halt freezes the trace") {
    ReasoningTrace t;
    t.append_model_token("partial");
    InterventionAction a;
    a.kind = ActionKind::Halt;
    apply_intervention(t, a, Span{0, 0});
    CHECK(t.halted());
    CHECK(t.full_text() == "partial");
}

TEST_CASE("missing InjectText payload is a contract violation") {
    ReasoningTrace t;
    t.append_model_token("x");
    InterventionAction a;
    a.kind = ActionKind::InjectText;
    CHECK_THROWS_AS(apply_intervention(t, a, Span{0, 1}), ContractViolation);
}
