#include "doctest.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "interwhen/game24.hpp"
#include "interwhen/maze.hpp"
#include "interwhen/spatial.hpp"
#include "interwhen/taskgen.hpp"

using namespace interwhen;

TEST_CASE("generation is deterministic in the seed") {
    for (const char* kind : {"maze", "spatial", "game24"}) {
        CAPTURE(kind);
        TaskInstance a = generate_task(kind, 17);
        TaskInstance b = generate_task(kind, 17);
        CHECK(task_to_json(a) == task_to_json(b));
        TaskInstance c = generate_task(kind, 18);
        CHECK(task_to_json(a) != task_to_json(c));
        CHECK(a.data.at("seed").get<std::uint64_t>() == 17);
    }
    CHECK_THROWS_AS(generate_task("sudoku", 1), std::invalid_argument);
}

TEST_CASE("maze tasks carry a walkable grid whose turn counts match the gold option") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        CAPTURE(seed);
        TaskInstance t = generate_maze_task(seed);
        REQUIRE(t.kind == "maze");

        MazeGrid grid{t.data.at("grid").get<std::vector<std::string>>()};
        auto walk = walk_path(grid);
        REQUIRE(walk.has_value());
        TurnCounts oracle = count_turns(walk->dirs);

        CHECK(oracle.right == t.data.at("turns").at("right").get<int>());
        CHECK(oracle.left == t.data.at("turns").at("left").get<int>());
        CHECK(static_cast<int>(walk->dirs.size()) == t.data.at("steps").get<int>());

        const auto& options = t.data.at("options");
        REQUIRE(options.size() == 4);
        std::string gold_text = options.at(t.gold).get<std::string>();
        CHECK(gold_text == "Right=" + std::to_string(oracle.right) +
                               ", Left=" + std::to_string(oracle.left));

        std::set<std::string> distinct;
        for (const auto& [letter, text] : options.items()) {
            distinct.insert(text.get<std::string>());
            CHECK(t.prompt.find(letter + ") " + text.get<std::string>()) != std::string::npos);
        }
        CHECK(distinct.size() == 4);
        for (const auto& row : t.data.at("grid"))
            CHECK(t.prompt.find(row.get<std::string>()) != std::string::npos);
    }
}

TEST_CASE("spatial tasks are satisfiable and the gold option is entailed") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        CAPTURE(seed);
        TaskInstance t = generate_spatial_task(seed);
        REQUIRE(t.kind == "spatial");

        RelationStore store;
        std::vector<DiagRelation> givens;
        for (const auto& g : t.data.at("givens")) {
            DiagRelation rel;
            rel.subject = g.at("subject").get<std::string>();
            rel.object = g.at("object").get<std::string>();
            rel.dir = *parse_diag(g.at("dir").get<std::string>());
            givens.push_back(rel);
            REQUIRE(store.assert_relation(rel));
        }

        std::string subject = t.data.at("question").at("subject").get<std::string>();
        std::string object = t.data.at("question").at("object").get<std::string>();
        auto ent = entailed_diag(store, subject, object);
        REQUIRE(ent.has_value());
        CHECK(diag_name(*ent) == t.data.at("options").at(t.gold).get<std::string>());

        // The question must take actual derivation, not clue lookup.
        for (const DiagRelation& g : givens) {
            bool same = (g.subject == subject && g.object == object) ||
                        (g.subject == object && g.object == subject);
            CHECK(!same);
        }
    }
}

TEST_CASE("game24 tasks are solvable and ship a verifying witness") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        CAPTURE(seed);
        TaskInstance t = generate_game24_task(seed);
        REQUIRE(t.kind == "game24");

        auto nums = t.data.at("numbers").get<std::vector<long long>>();
        REQUIRE(nums.size() == 4);
        for (long long v : nums) {
            CHECK(v >= 1);
            CHECK(v <= 13);
        }
        Verdict r = verify_game24(nums, t.gold);
        CHECK(r.pass);
    }
}

TEST_CASE("tasks survive a json round trip") {
    for (const char* kind : {"maze", "spatial", "game24"}) {
        CAPTURE(kind);
        TaskInstance t = generate_task(kind, 99);
        nlohmann::json j = task_to_json(t);
        TaskInstance back = task_from_json(j);
        CHECK(task_to_json(back) == j);
        CHECK(back.id == t.id);
        CHECK(back.prompt == t.prompt);
    }
}

TEST_CASE("answer matching accepts the gold letter, its text, and equivalent equations") {
    TaskInstance maze = generate_maze_task(3);
    std::string gold_text = maze.data.at("options").at(maze.gold).get<std::string>();
    CHECK(answer_matches_gold(maze, maze.gold));
    CHECK(answer_matches_gold(maze, " " + maze.gold + " "));
    char lower = static_cast<char>(std::tolower(maze.gold[0]));
    CHECK(answer_matches_gold(maze, std::string(1, lower)));
    CHECK(answer_matches_gold(maze, gold_text));
    CHECK(!answer_matches_gold(maze, ""));
    char wrong = maze.gold == "A" ? 'B' : 'A';
    CHECK(!answer_matches_gold(maze, std::string(1, wrong)));

    TaskInstance g24 = generate_game24_task(3);
    CHECK(answer_matches_gold(g24, g24.gold));
    CHECK(!answer_matches_gold(g24, "1+1+1+1"));
    // Any correct expression counts, not just the shipped witness.
    auto nums = g24.data.at("numbers").get<std::vector<long long>>();
    std::array<long long, 4> arr{nums[0], nums[1], nums[2], nums[3]};
    std::reverse(arr.begin(), arr.end());
    auto alt = solve24(arr);
    REQUIRE(alt.has_value());
    CHECK(answer_matches_gold(g24, *alt));
}

TEST_CASE("task answer extractors match the task surface") {
    TaskInstance maze = generate_maze_task(5);
    auto mcq = make_task_answer_extractor(maze);
    auto r = mcq->scan("After all that, the answer is " + maze.gold + ".", 0, true);
    REQUIRE(r.states.size() == 1);
    CHECK(std::get<AnswerPayload>(r.states[0].payload).text == maze.gold);

    std::string gold_text = maze.data.at("options").at(maze.gold).get<std::string>();
    auto r2 = mcq->scan("the answer is " + gold_text, 0, true);
    REQUIRE(r2.states.size() == 1);
    CHECK(std::get<AnswerPayload>(r2.states[0].payload).text == gold_text);

    TaskInstance g24 = generate_game24_task(5);
    auto free = make_task_answer_extractor(g24);
    auto r3 = free->scan("the answer is " + g24.gold + "\n", 0, true);
    REQUIRE(r3.states.size() == 1);
    CHECK(std::get<AnswerPayload>(r3.states[0].payload).text == g24.gold);
}

TEST_CASE("task bindings are wired to the instance data") {
    for (const char* kind : {"maze", "spatial", "game24"}) {
        CAPTURE(kind);
        TaskInstance t = generate_task(kind, 11);
        auto bindings = make_task_bindings(t);
        REQUIRE(bindings.size() == 1);
        CHECK(!bindings[0]->id().empty());
        CHECK(!bindings[0]->extractor().id().empty());
    }

    // The game24 binding rejects an equation over the wrong numbers.
    TaskInstance g24 = generate_game24_task(11);
    auto bindings = make_task_bindings(g24);
    ExtractedState eq;
    eq.kind = StateKind::Equation;
    eq.payload = EquationPayload{"9999+1"};
    Verdict v = bindings[0]->check(eq);
    CHECK(!v.pass);
    CHECK(v.feedback.has_value());
}
