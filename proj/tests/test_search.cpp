#include "doctest.h"

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

#include "interwhen/game24.hpp"
#include "interwhen/mock_backend.hpp"
#include "interwhen/search.hpp"

using namespace interwhen;
using nlohmann::json;

namespace {

json node(std::vector<std::string> tokens) {
    json n;
    n["tokens"] = tokens;
    return n;
}

TaskInstance mcq_task() {
    TaskInstance t;
    t.kind = "spatial";
    t.id = "mcq-fixture";
    t.prompt = "Where is X relative to Y?";
    t.gold = "B";
    t.data["seed"] = 0;
    t.data["options"] = {{"A", "Northwest"}, {"B", "Northeast"}, {"C", "Southwest"},
                         {"D", "Southeast"}};
    return t;
}

TaskInstance g24_task() {
    TaskInstance t;
    t.kind = "game24";
    t.id = "g24-fixture";
    t.prompt = "Reach 24 with 3, 3, 8, 8.";
    t.gold = "8/(3-8/3)";
    t.data["seed"] = 0;
    t.data["numbers"] = {3, 3, 8, 8};
    return t;
}

TreeNode node_of(std::vector<long long> values) {
    TreeNode n;
    for (long long v : values) n.items.push_back({Rational(v), std::to_string(v), false});
    return n;
}

}  // namespace

TEST_CASE("the final answer is the last answer state in the text") {
    auto ex = make_answer_extractor();
    CHECK(resolve_final_answer("the answer is A. No wait, the answer is C.", *ex) == "C");
    CHECK(resolve_final_answer("no conclusion here", *ex).empty());
}

TEST_CASE("a single baseline is one attempt with its own token count") {
    json script;
    script["nodes"]["root"] = node({"Let me see.\n\n", "the answer is B"});
    auto backend = make_mock_backend(script);

    BaselineResult r = run_single_baseline(*backend, mcq_task(), {});
    CHECK(r.method == "single");
    CHECK(r.answer == "B");
    REQUIRE(r.attempts.size() == 1);
    CHECK(r.attempts[0].model_tokens == 2);
    CHECK(r.total_model_tokens() == 2);
    CHECK(r.total_injected_tokens() == 0);
}

TEST_CASE("best-of-k on a self-checkable task picks the verified attempt") {
    json script;
    script["nodes"]["g_wrong"] = node({"Try something.\n\n", "the answer is 3*3+8+8"});
    script["nodes"]["g_right"] = node({"Let me try.\n\n", "the answer is 8/(3-8/3)", "\n"});
    script["nodes"]["g_wrong2"] = node({"Or else.\n\n", "the answer is 3+3+8+8"});
    script["attempts"] = {"g_wrong", "g_right", "g_wrong2"};
    auto backend = make_mock_backend(script);

    BaselineResult r = best_of_k(*backend, g24_task(), {}, 3);
    CHECK(r.method == "best_of_3");
    CHECK(r.answer == "8/(3-8/3)");
    REQUIRE(r.attempts.size() == 3);
    // The losing attempts still cost their tokens.
    CHECK(r.total_model_tokens() == 2 + 3 + 2);
    CHECK(r.attempts[0].answer == "3*3+8+8");
}

TEST_CASE("best-of-k without a checker falls back to majority") {
    json script;
    script["nodes"]["ans_b"] = node({"Let me see.\n\n", "the answer is B"});
    script["nodes"]["ans_a"] = node({"Hmm.\n\n", "the answer is A"});
    script["nodes"]["ans_b2"] = node({"Check again.\n\n", "the answer is B", "."});
    script["attempts"] = {"ans_b", "ans_a", "ans_b2"};
    auto backend = make_mock_backend(script);

    BaselineResult r = best_of_k(*backend, mcq_task(), {}, 3);
    CHECK(r.answer == "B");
    CHECK(r.total_model_tokens() == 2 + 2 + 3);
}

TEST_CASE("majority vote breaks ties toward the earliest answer") {
    json script;
    script["nodes"]["ans_a"] = node({"Hmm.\n\n", "the answer is A"});
    script["nodes"]["ans_b"] = node({"Let me see.\n\n", "the answer is B"});
    script["attempts"] = {"ans_a", "ans_b"};
    auto backend = make_mock_backend(script);

    BaselineResult r = majority_vote(*backend, mcq_task(), {}, 2);
    CHECK(r.method == "majority_of_2");
    CHECK(r.answer == "A");
    REQUIRE(r.attempts.size() == 2);
}

TEST_CASE("generate-test retries with the failure appended to the prompt") {
    json script;
    script["nodes"]["root"] = node({"Try something.\n\n", "the answer is 3*3+8+8"});
    script["nodes"]["g_right"] = node({"Let me try.\n\n", "the answer is 8/(3-8/3)", "\n"});
    script["prompts"] = json::array(
        {{{"contains", "Your previous attempt failed"}, {"start", "g_right"}}});
    auto backend = make_mock_backend(script);

    BaselineResult r = generate_test_loop(*backend, g24_task(), {}, 4);
    CHECK(r.method == "generate_test");
    REQUIRE(r.attempts.size() == 2);
    CHECK(r.attempts[0].answer == "3*3+8+8");
    CHECK(r.answer == "8/(3-8/3)");
}

TEST_CASE("generate-test gives up empty-handed after max rounds") {
    json script;
    script["nodes"]["root"] = node({"Try something.\n\n", "the answer is 3+3+8+8"});
    auto backend = make_mock_backend(script);

    BaselineResult r = generate_test_loop(*backend, g24_task(), {}, 2);
    CHECK(r.answer.empty());
    REQUIRE(r.attempts.size() == 2);
    CHECK(r.attempts[1].answer == "3+3+8+8");
}

TEST_CASE("exhaustive tree search agrees with brute force") {
    const std::vector<std::array<long long, 4>> quads = {
        {3, 3, 8, 8}, {1, 1, 1, 1}, {4, 6, 1, 1}, {1, 2, 3, 4}, {1, 1, 1, 2}, {13, 10, 4, 7}};
    int scorer_calls = 0;
    TreeScorer scorer = [&](const TreeNode&) {
        ++scorer_calls;
        return TreeRating::Impossible;
    };
    TreeSearchOptions opts;
    opts.exhaustive = true;

    for (const auto& nums : quads) {
        CAPTURE(nums[0]);
        CAPTURE(nums[3]);
        auto brute = solve24(nums);
        TreeSearchResult r = tree_search_24(nums, propose_all_combinations, scorer, opts);
        CHECK(r.expression.has_value() == brute.has_value());
        if (r.expression) {
            std::vector<long long> inputs(nums.begin(), nums.end());
            CHECK(verify_game24(inputs, *r.expression).pass);
        }
    }
    CHECK(scorer_calls == 0);  // exhaustive mode never consults the scorer
}

TEST_CASE("beam and depth caps bound the expansions") {
    int proposer_calls = 0;
    TreeProposer counting = [&](const TreeNode& n) {
        ++proposer_calls;
        return propose_all_combinations(n);
    };
    TreeScorer scorer = [](const TreeNode& n) { return range_heuristic_rating(n); };

    TreeSearchOptions opts;  // beam 2, depth 8
    TreeSearchResult r = tree_search_24({5, 5, 5, 11}, counting, scorer, opts);
    CHECK(r.expanded == proposer_calls);
    // Four numbers shrink by one per level: 1 root + at most beam nodes at
    // the three- and two-item levels.
    CHECK(r.expanded <= 5);
    if (r.expression) {
        CHECK(verify_game24({5, 5, 5, 11}, *r.expression).pass);
    }

    proposer_calls = 0;
    TreeSearchOptions shallow;
    shallow.beam_width = 100;
    shallow.max_depth = 0;
    TreeSearchResult r2 = tree_search_24({3, 3, 8, 8}, counting, scorer, shallow);
    CHECK(r2.expanded == 1);
    CHECK(proposer_calls == 1);
    CHECK(!r2.expression.has_value());

    proposer_calls = 0;
    TreeSearchOptions narrow;
    narrow.beam_width = 1;
    TreeSearchResult r3 = tree_search_24({1, 2, 3, 4}, counting, scorer, narrow);
    CHECK(r3.expanded == proposer_calls);
    CHECK(r3.expanded <= 3);
}

TEST_CASE("pairwise combination proposals cover every operator order") {
    TreeNode two = node_of({2, 3});
    auto children = propose_all_combinations(two);
    REQUIRE(children.size() == 6);  // + * - -(flipped) / /(flipped)
    std::vector<std::string> texts, values;
    for (const TreeNode& c : children) {
        REQUIRE(c.items.size() == 1);
        REQUIRE(c.steps.size() == 1);
        texts.push_back(c.items[0].text);
        values.push_back(to_string(c.items[0].value));
        CHECK(c.steps[0] == c.items[0].text + " = " + to_string(c.items[0].value));
        CHECK(c.items[0].composite);
    }
    CHECK(texts == std::vector<std::string>{"2 + 3", "2 * 3", "2 - 3", "3 - 2", "2 / 3", "3 / 2"});
    CHECK(values == std::vector<std::string>{"5", "6", "-1", "1", "2/3", "3/2"});

    // Division by zero is not proposed.
    TreeNode with_zero = node_of({0, 5});
    CHECK(propose_all_combinations(with_zero).size() == 5);

    // Untouched items survive into the child.
    TreeNode three = node_of({2, 3, 7});
    auto kids = propose_all_combinations(three);
    for (const TreeNode& c : kids) CHECK(c.items.size() == 2);
}

TEST_CASE("the range heuristic rates by reachability") {
    TreeNode sure;
    sure.items.push_back({Rational(24), "24", true});
    CHECK(range_heuristic_rating(sure) == TreeRating::Sure);

    TreeNode dead;
    dead.items.push_back({Rational(7), "7", false});
    CHECK(range_heuristic_rating(dead) == TreeRating::Impossible);

    CHECK(range_heuristic_rating(node_of({4, 6})) == TreeRating::Sure);
    CHECK(range_heuristic_rating(node_of({1, 2})) == TreeRating::Impossible);  // bound 6 < 24
    CHECK(range_heuristic_rating(node_of({13, 9})) == TreeRating::Unlikely);
    CHECK(range_heuristic_rating(node_of({1, 2, 5})) == TreeRating::Likely);
    CHECK(range_heuristic_rating(TreeNode{}) == TreeRating::Impossible);
}

TEST_CASE("the llm proposer keeps only well-formed, correct, available combinations") {
    json script;
    script["nodes"]["root"] = node({"???"});
    script["nodes"]["propose35"] = node({"3 + 5 = 8\n", "3 * 5 = 16\n", "gibberish\n",
                                         "3 + 9 = 12\n", "5 - 3 = 2\n"});
    script["prompts"] = json::array({{{"contains", "Numbers: 3 5\nSuggest"},
                                      {"start", "propose35"}}});
    auto backend = make_mock_backend(script);

    int tokens = 0;
    TreeProposer propose = make_llm_proposer(*backend, {}, &tokens);
    auto children = propose(node_of({3, 5}));

    REQUIRE(children.size() == 2);  // wrong arithmetic, junk, unavailable operand all dropped
    CHECK(children[0].items.size() == 1);
    CHECK(children[0].items[0].text == "3 + 5");
    CHECK(children[0].items[0].value == Rational(8));
    CHECK(children[0].steps == std::vector<std::string>{"3 + 5 = 8"});
    CHECK(children[1].items[0].text == "5 - 3");
    CHECK(children[1].items[0].value == Rational(2));
    CHECK(tokens == 5);
}

TEST_CASE("the llm scorer parses the leading rating word") {
    json script;
    script["nodes"]["root"] = node({"??? no idea"});
    script["nodes"]["s_sure"] = node({"Sure thing!"});
    script["nodes"]["s_likely"] = node({"likely candidates exist"});
    script["nodes"]["s_imp"] = node({"impossible."});
    script["prompts"] = json::array({
        {{"contains", "Numbers: 4 6\nCan"}, {"start", "s_sure"}},
        {{"contains", "Numbers: 2 2 6\nCan"}, {"start", "s_likely"}},
        {{"contains", "Numbers: 1 1 1\nCan"}, {"start", "s_imp"}},
    });
    auto backend = make_mock_backend(script);

    int tokens = 0;
    TreeScorer score = make_llm_scorer(*backend, {}, &tokens);
    CHECK(score(node_of({4, 6})) == TreeRating::Sure);
    CHECK(score(node_of({2, 2, 6})) == TreeRating::Likely);
    CHECK(score(node_of({1, 1, 1})) == TreeRating::Impossible);
    CHECK(score(node_of({9, 9})) == TreeRating::Unlikely);  // unparseable reply
    CHECK(tokens == 4);
}
