#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "interwhen/backend.hpp"
#include "interwhen/game24.hpp"
#include "interwhen/taskgen.hpp"

namespace interwhen {

// ------------------------------------------------------------ sampling ----

struct AttemptRecord {
    std::string answer;  // resolved final answer, empty if none found
    int model_tokens = 0;
    int injected_tokens = 0;
    std::string trace_text;
};

struct BaselineResult {
    std::string method;
    std::string answer;  // the ensemble's final answer, empty if none
    std::vector<AttemptRecord> attempts;

    int total_model_tokens() const;
    int total_injected_tokens() const;
};

// Last answer state reported by the extractor over the finished text.
std::string resolve_final_answer(std::string_view text, const Extractor& answer_ex);

// One plain unmonitored generation.
BaselineResult run_single_baseline(Backend& backend, const TaskInstance& task,
                                   const GenerationParams& params);

// k independent samples. The answer is the first one that passes the task's
// own checker when the task is self-checkable (game24); otherwise the most
// common answer. Token totals always cover all k samples.
BaselineResult best_of_k(Backend& backend, const TaskInstance& task,
                         const GenerationParams& params, int k);

// k independent samples, most common non-empty answer (first seen wins ties).
BaselineResult majority_vote(Backend& backend, const TaskInstance& task,
                             const GenerationParams& params, int k);

// Generate, test the attempt (equation check for game24, otherwise a full
// trace re-verification), and on failure retry with the failure appended to
// the prompt. Stops at the first passing attempt or after max_rounds.
BaselineResult generate_test_loop(Backend& backend, const TaskInstance& task,
                                  const GenerationParams& params, int max_rounds);

// ------------------------------------------------------- tree search ------

enum class TreeRating { Impossible, Unlikely, Likely, Sure };

// One partial solution: the numbers still available, each carrying the
// expression that produced it.
struct TreeItem {
    Rational value;
    std::string text;
    bool composite = false;
};

struct TreeNode {
    std::vector<TreeItem> items;
    std::vector<std::string> steps;  // human-readable "a op b = c" history
};

using TreeProposer = std::function<std::vector<TreeNode>(const TreeNode&)>;
using TreeScorer = std::function<TreeRating(const TreeNode&)>;

struct TreeSearchOptions {
    int beam_width = 2;
    int max_depth = 8;
    // Exhaustive mode ignores the beam and the scorer and visits everything.
    bool exhaustive = false;
};

struct TreeSearchResult {
    std::optional<std::string> expression;  // reaches the target, if found
    int expanded = 0;                       // proposer invocations
    int model_tokens = 0;                   // tokens spent by LLM helpers
};

// Beam search over two-number combinations toward the target value.
TreeSearchResult tree_search_24(const std::array<long long, 4>& nums, const TreeProposer& propose,
                                const TreeScorer& score, const TreeSearchOptions& opts,
                                long long target = 24);

// All ways of combining two remaining items with + - * / (both orders for
// the asymmetric operators).
std::vector<TreeNode> propose_all_combinations(const TreeNode& node);

// Cheap deterministic plausibility rating from value ranges.
TreeRating range_heuristic_rating(const TreeNode& node, long long target = 24);

// LLM-backed proposer/scorer. Answers are parsed defensively: a proposal
// line must read "a op b = c" over currently available values and compute
// correctly, a rating must start with sure/likely/impossible. Tokens spent
// are added to *token_counter when given.
TreeProposer make_llm_proposer(Backend& backend, const GenerationParams& params,
                               int* token_counter = nullptr);
TreeScorer make_llm_scorer(Backend& backend, const GenerationParams& params,
                           int* token_counter = nullptr);

}  // namespace interwhen
