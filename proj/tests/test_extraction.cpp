#include "doctest.h"

#include <string>
#include <vector>

#include "interwhen/extraction.hpp"

using namespace interwhen;

namespace {

std::string brief(const ExtractedState& s) {
    std::string out = std::string(state_kind_name(s.kind)) + "@" +
                      std::to_string(s.span.begin) + ":" + std::to_string(s.span.end) + "=";
    if (auto* a = std::get_if<AnswerPayload>(&s.payload)) out += a->text;
    if (auto* e = std::get_if<EquationPayload>(&s.payload)) out += e->expression;
    if (auto* c = std::get_if<SpatialConclusionPayload>(&s.payload))
        out += c->subject + "|" + std::string(dir8_name(c->dir)) + "|" + c->object;
    if (auto* r = std::get_if<SpatialRelationsPayload>(&s.payload))
        out += std::to_string(r->relations.size()) + " relations";
    if (auto* m = std::get_if<MazeStepPayload>(&s.payload))
        out += "step " + (m->index ? std::to_string(*m->index) : std::string("?"));
    if (auto* f = std::get_if<ArtifactPayload>(&s.payload)) out += f->family + ":" + f->body;
    if (s.parse_failed) out += " (parse failed)";
    return out;
}

std::vector<std::string> scan_all(const Extractor& ex, const std::string& text) {
    ScanResult r = ex.scan(text, 0, true);
    std::vector<std::string> out;
    for (const auto& s : r.states) out.push_back(brief(s));
    return out;
}

// Replays the text as a growing stream cut at every multiple of `step`,
// scanning the unseen tail each round exactly as the monitor does.
std::vector<std::string> scan_streamed(const Extractor& ex, const std::string& text,
                                       std::size_t step) {
    std::vector<std::string> out;
    std::size_t cursor = 0;
    for (std::size_t fed = step; fed < text.size() + step; fed += step) {
        std::size_t n = std::min(fed, text.size());
        bool final = n == text.size();
        ScanResult r = ex.scan(std::string_view(text).substr(0, n), cursor, final);
        for (const auto& s : r.states) out.push_back(brief(s));
        REQUIRE(r.new_cursor >= cursor);
        cursor = r.new_cursor;
    }
    return out;
}

void check_stream_invariance(const Extractor& ex, const std::string& text) {
    auto whole = scan_all(ex, text);
    for (std::size_t step : {1u, 2u, 3u, 5u, 7u, 11u, 64u}) {
        CAPTURE(step);
        CHECK(scan_streamed(ex, text, step) == whole);
    }
}

}  // namespace

TEST_CASE("answer extractor matches phrases, letters and boxes") {
    auto ex = make_answer_extractor();
    std::string text =
        "I think the answer is B for now.\n"
        "Answer: C\n"
        "On reflection the FINAL ANSWER is (D).\n"
        "\\boxed{A}\n";
    ScanResult r = ex->scan(text, 0, true);
    REQUIRE(r.states.size() == 4);
    CHECK(std::get<AnswerPayload>(r.states[0].payload).text == "B");
    CHECK(r.states[0].kind == StateKind::AnswerProposal);
    CHECK(std::get<AnswerPayload>(r.states[1].payload).text == "C");
    CHECK(std::get<AnswerPayload>(r.states[2].payload).text == "D");
    CHECK(r.states[3].kind == StateKind::BoxedAnswer);
    CHECK(std::get<AnswerPayload>(r.states[3].payload).text == "A");

    check_stream_invariance(*ex, text);
}

TEST_CASE("answer extractor prefers the longest option text") {
    AnswerExtractorOptions opts;
    opts.option_texts = {"Quail", "Quail's Quilts"};
    auto ex = make_answer_extractor(opts);
    ScanResult r = ex->scan("the answer is Quail's Quilts, clearly\n", 0, true);
    REQUIRE(r.states.size() == 1);
    CHECK(std::get<AnswerPayload>(r.states[0].payload).text == "Quail's Quilts");
}

TEST_CASE("free-form answers keep the whole expression") {
    AnswerExtractorOptions opts;
    opts.letters.clear();
    auto ex = make_answer_extractor(opts);
    std::string text = "the answer is ((1 - 5) + 8) * 6\n";
    ScanResult r = ex->scan(text, 0, true);
    REQUIRE(r.states.size() == 1);
    CHECK(std::get<AnswerPayload>(r.states[0].payload).text == "((1 - 5) + 8) * 6");

    ScanResult boxed = ex->scan("\\boxed{6 * (8 - 5 + 1)}", 0, true);
    REQUIRE(boxed.states.size() == 1);
    CHECK(std::get<AnswerPayload>(boxed.states[0].payload).text == "6 * (8 - 5 + 1)");
}

TEST_CASE("unfinished answers are withheld until the text is final") {
    auto ex = make_answer_extractor();
    ScanResult partial = ex->scan("so the answer is", 0, false);
    CHECK(partial.states.empty());
    CHECK(partial.new_cursor <= 3);  // must not skip past a possible match

    ScanResult done = ex->scan("so the answer is B", partial.new_cursor, true);
    REQUIRE(done.states.size() == 1);
    CHECK(std::get<AnswerPayload>(done.states[0].payload).text == "B");
}

TEST_CASE("equation extractor filters by operand multiset") {
    auto ex = make_equation_extractor({1, 9, 7, 3});
    std::string text =
        "Maybe this works: 1 + 9 + 7 - 3 = 24.\n\n"
        "Or with other numbers, 5 + 5 + 5 = 15, which uses the wrong inputs.\n"
        "Reversed form: 24 = (9 - 1) * 3 * 7 / 7, no wait.\n";
    ScanResult r = ex->scan(text, 0, true);
    REQUIRE(r.states.size() == 1);
    CHECK(std::get<EquationPayload>(r.states[0].payload).expression == "1 + 9 + 7 - 3");

    auto ex2 = make_equation_extractor({6, 4});
    ScanResult r2 = ex2->scan("note that 24 = 6*4 here\n", 0, true);
    REQUIRE(r2.states.size() == 1);
    CHECK(std::get<EquationPayload>(r2.states[0].payload).expression == "6*4");

    check_stream_invariance(*ex, text);
}

TEST_CASE("maze extractor parses locate and step blocks") {
    auto ex = make_maze_extractor();
    std::string text =
        ">>> LOCATE START AND EXIT\n"
        "S position: (1,6)\n"
        "E position: (3,6)\n"
        "\n"
        ">>> STEP 1: Move RIGHT from (1,6) to (1,7)\n"
        "Current position: (1,7)\n"
        "Previous direction: none\n"
        "Current direction: RIGHT\n"
        "Turn type: STRAIGHT\n"
        "Running count: Right=0, Left=0\n"
        "\n"
        ">>> STEP 2: Move DOWN from (1,7) to (2,7)\n"
        "Current position: (2,7)\n"
        "Previous direction: RIGHT\n"
        "Current direction: DOWN\n"
        "Turn type: RIGHT\n"
        "Running count: Right=1, Left=0\n"
        "\n"
        "Done walking.\n";
    ScanResult r = ex->scan(text, 0, true);
    REQUIRE(r.states.size() == 3);

    auto& loc = std::get<MazeLocatePayload>(r.states[0].payload);
    CHECK(loc.s_pos == GridPos{1, 6});
    CHECK(loc.e_pos == GridPos{3, 6});

    auto& s1 = std::get<MazeStepPayload>(r.states[1].payload);
    CHECK(s1.index == 1);
    CHECK(s1.move_dir == Direction::Right);
    CHECK(s1.from_pos == GridPos{1, 6});
    CHECK(s1.to_pos == GridPos{1, 7});
    CHECK(s1.current_pos == GridPos{1, 7});
    CHECK(s1.prev_dir_line);
    CHECK(!s1.prev_dir.has_value());
    CHECK(s1.cur_dir == Direction::Right);
    CHECK(s1.claimed_turn == TurnType::Straight);
    REQUIRE(s1.counts.has_value());
    CHECK(s1.counts->right == 0);
    CHECK(s1.counts->left == 0);

    auto& s2 = std::get<MazeStepPayload>(r.states[2].payload);
    CHECK(s2.index == 2);
    CHECK(s2.prev_dir == Direction::Right);
    CHECK(s2.claimed_turn == TurnType::RightTurn);
    REQUIRE(s2.counts.has_value());
    CHECK(s2.counts->right == 1);

    // Spans cover the blocks they matched.
    std::string head = text.substr(r.states[1].span.begin, 8);
    CHECK(head == ">>> STEP");
    CHECK(text.substr(r.states[1].span.begin, r.states[1].span.length()).find("Running count") !=
          std::string::npos);

    check_stream_invariance(*ex, text);
}

TEST_CASE("maze headers must start their own line") {
    auto ex = make_maze_extractor();
    ScanResult r = ex->scan("as noted >>> STEP 1: Move UP from (1,1) to (0,1)\n\n", 0, true);
    CHECK(r.states.empty());
}

TEST_CASE("partial step blocks wait for their closing blank line") {
    auto ex = make_maze_extractor();
    std::string part =
        ">>> STEP 1: Move RIGHT from (1,6) to (1,7)\n"
        "Current position: (1,7)\n";
    ScanResult r = ex->scan(part, 0, false);
    CHECK(r.states.empty());
    CHECK(r.new_cursor == 0);

    std::string rest = part + "\nnext paragraph\n";
    ScanResult done = ex->scan(rest, r.new_cursor, true);
    REQUIRE(done.states.size() == 1);
    CHECK(std::get<MazeStepPayload>(done.states[0].payload).index == 1);
}

TEST_CASE("spatial extractor reports givens once and conclusions after them") {
    auto ex = make_spatial_extractor();
    std::string text =
        ">>> STEP 1: PARSE RELATIONSHIPS\n"
        "- Owl Post Couriers is to the Northeast of Kite & Compass Maps\n"
        "- Eventide Apothecary is to the Southeast of Owl Post Couriers\n"
        "\n"
        ">>> STEP 2: DERIVE RELATIONSHIPS\n"
        "\n"
        "Combining the clues, Eventide Apothecary is Northeast of Kite & Compass Maps.\n"
        "\n"
        "Therefore Eventide Apothecary is North of Owl Post Couriers.\n";
    ScanResult r = ex->scan(text, 0, true);
    REQUIRE(r.states.size() == 3);

    auto& rels = std::get<SpatialRelationsPayload>(r.states[0].payload);
    REQUIRE(rels.relations.size() == 2);
    CHECK(rels.relations[0] ==
          DiagRelation{"Owl Post Couriers", Diag::NE, "Kite & Compass Maps"});
    CHECK(rels.relations[1] ==
          DiagRelation{"Eventide Apothecary", Diag::SE, "Owl Post Couriers"});

    auto& c1 = std::get<SpatialConclusionPayload>(r.states[1].payload);
    CHECK(c1.subject == "Eventide Apothecary");
    CHECK(c1.dir == Dir8::NE);
    CHECK(c1.object == "Kite & Compass Maps");

    auto& c2 = std::get<SpatialConclusionPayload>(r.states[2].payload);
    CHECK(c2.dir == Dir8::N);

    check_stream_invariance(*ex, text);
}

TEST_CASE("restatements inside the givens block are not conclusions") {
    auto ex = make_spatial_extractor();
    std::string text =
        ">>> STEP 1: PARSE RELATIONSHIPS\n"
        "- A Shop is to the Northeast of B Shop\n"
        "\n"
        "So A Shop is Northeast of B Shop as given.\n";
    ScanResult r = ex->scan(text, 0, true);
    REQUIRE(r.states.size() == 1);
    CHECK(r.states[0].kind == StateKind::SpatialRelations);
}

TEST_CASE("artifact extractor captures fenced blocks after trigger phrases") {
    auto ex = make_artifact_extractor({{"lemma", {"here is the lemma"}}});
    std::string text =
        "Some prose first. Here is the lemma:\n"
        "```\n"
        "for all n, f(n) < g(n)\n"
        "```\n"
        "and more prose.\n";
    ScanResult r = ex->scan(text, 0, true);
    REQUIRE(r.states.size() == 1);
    auto& a = std::get<ArtifactPayload>(r.states[0].payload);
    CHECK(a.family == "lemma");
    CHECK(a.body == "for all n, f(n) < g(n)\n");

    ScanResult none = ex->scan("here is the lemma: but no fence follows\n", 0, true);
    CHECK(none.states.empty());

    check_stream_invariance(*ex, text);
}
