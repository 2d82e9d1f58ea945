#include "interwhen/search.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "interwhen/monitor.hpp"

namespace interwhen {

namespace {

std::string fold_key(std::string_view s) {
    std::size_t b = 0, e = s.size();
    auto sp = [&](std::size_t i) { return std::isspace(static_cast<unsigned char>(s[i])) != 0; };
    while (b < e && sp(b)) ++b;
    while (e > b && sp(e - 1)) --e;
    std::string out;
    for (std::size_t i = b; i < e; ++i)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    return out;
}

AttemptRecord attempt_from_result(const MonitorResult& r, const Extractor& answer_ex) {
    AttemptRecord a;
    a.trace_text = r.trace.full_text();
    a.model_tokens = r.trace.model_tokens();
    a.injected_tokens = r.trace.injected_tokens();
    a.answer = resolve_final_answer(a.trace_text, answer_ex);
    return a;
}

AttemptRecord plain_attempt(Backend& backend, const std::string& prompt,
                            const GenerationParams& params, const Extractor& answer_ex) {
    MonitorConfig cfg;
    cfg.intervene = false;
    MonitorResult r = run_monitored_generation(backend, prompt, params, {}, nullptr, cfg);
    return attempt_from_result(r, answer_ex);
}

// Most common non-empty answer; the earliest one wins ties.
std::string majority_answer(const std::vector<AttemptRecord>& attempts) {
    std::map<std::string, int> counts;
    for (const AttemptRecord& a : attempts) {
        std::string key = fold_key(a.answer);
        if (!key.empty()) ++counts[key];
    }
    int best = 0;
    std::string best_key;
    for (const AttemptRecord& a : attempts) {
        std::string key = fold_key(a.answer);
        if (key.empty()) continue;
        if (counts[key] > best) {
            best = counts[key];
            best_key = key;
        }
    }
    if (best_key.empty()) return {};
    for (const AttemptRecord& a : attempts)
        if (fold_key(a.answer) == best_key) return a.answer;
    return {};
}

std::string generation_to_string(Backend& backend, const std::string& prompt,
                                 const GenerationParams& params, int* token_counter) {
    std::string out;
    try {
        auto stream = backend.generate({prompt, "", params});
        while (auto ev = stream->next()) {
            out += ev->text;
            if (token_counter && !ev->text.empty()) ++*token_counter;
        }
    } catch (const BackendError&) {
        return {};
    }
    return out;
}

std::string item_list(const TreeNode& node) {
    std::string out;
    for (const TreeItem& it : node.items) {
        if (!out.empty()) out += " ";
        out += to_string(it.value);
    }
    return out;
}

std::string wrap_operand(const TreeItem& it) {
    return it.composite ? "(" + it.text + ")" : it.text;
}

TreeNode combine_items(const TreeNode& node, std::size_t i, std::size_t j, char op,
                       Rational value, bool flipped) {
    const TreeItem& a = flipped ? node.items[j] : node.items[i];
    const TreeItem& b = flipped ? node.items[i] : node.items[j];
    TreeItem made;
    made.value = value;
    made.text = wrap_operand(a) + " " + op + " " + wrap_operand(b);
    made.composite = true;
    TreeNode child;
    for (std::size_t k = 0; k < node.items.size(); ++k)
        if (k != i && k != j) child.items.push_back(node.items[k]);
    child.steps = node.steps;
    child.steps.push_back(made.text + " = " + to_string(value));
    child.items.push_back(std::move(made));
    return child;
}

}  // namespace

int BaselineResult::total_model_tokens() const {
    int n = 0;
    for (const AttemptRecord& a : attempts) n += a.model_tokens;
    return n;
}

int BaselineResult::total_injected_tokens() const {
    int n = 0;
    for (const AttemptRecord& a : attempts) n += a.injected_tokens;
    return n;
}

std::string resolve_final_answer(std::string_view text, const Extractor& answer_ex) {
    ScanResult r = answer_ex.scan(text, 0, true);
    for (auto it = r.states.rbegin(); it != r.states.rend(); ++it) {
        if (it->parse_failed) continue;
        if (it->kind != StateKind::AnswerProposal && it->kind != StateKind::BoxedAnswer) continue;
        return std::get<AnswerPayload>(it->payload).text;
    }
    return {};
}

BaselineResult run_single_baseline(Backend& backend, const TaskInstance& task,
                                   const GenerationParams& params) {
    BaselineResult result;
    result.method = "single";
    auto answer_ex = make_task_answer_extractor(task);
    result.attempts.push_back(plain_attempt(backend, task.prompt, params, *answer_ex));
    result.answer = result.attempts.front().answer;
    return result;
}

BaselineResult best_of_k(Backend& backend, const TaskInstance& task,
                         const GenerationParams& params, int k) {
    BaselineResult result;
    result.method = "best_of_" + std::to_string(k);
    auto answer_ex = make_task_answer_extractor(task);
    for (int i = 0; i < k; ++i)
        result.attempts.push_back(plain_attempt(backend, task.prompt, params, *answer_ex));

    if (task.kind == "game24") {
        auto nums = task.data.at("numbers").get<std::vector<long long>>();
        for (const AttemptRecord& a : result.attempts) {
            if (!a.answer.empty() && verify_game24(nums, a.answer).pass) {
                result.answer = a.answer;
                return result;
            }
        }
    }
    result.answer = majority_answer(result.attempts);
    return result;
}

BaselineResult majority_vote(Backend& backend, const TaskInstance& task,
                             const GenerationParams& params, int k) {
    BaselineResult result;
    result.method = "majority_of_" + std::to_string(k);
    auto answer_ex = make_task_answer_extractor(task);
    for (int i = 0; i < k; ++i)
        result.attempts.push_back(plain_attempt(backend, task.prompt, params, *answer_ex));
    result.answer = majority_answer(result.attempts);
    return result;
}

BaselineResult generate_test_loop(Backend& backend, const TaskInstance& task,
                                  const GenerationParams& params, int max_rounds) {
    BaselineResult result;
    result.method = "generate_test";
    auto answer_ex = make_task_answer_extractor(task);
    std::string prompt = task.prompt;

    for (int round = 0; round < max_rounds; ++round) {
        MonitorConfig cfg;
        cfg.intervene = false;
        MonitorResult r = run_monitored_generation(backend, prompt, params, {}, nullptr, cfg);
        AttemptRecord attempt = attempt_from_result(r, *answer_ex);
        result.attempts.push_back(attempt);

        bool pass = false;
        std::string failure;
        if (attempt.answer.empty()) {
            failure = "no final answer was given";
        } else if (task.kind == "game24") {
            auto nums = task.data.at("numbers").get<std::vector<long long>>();
            Verdict v = verify_game24(nums, attempt.answer);
            pass = v.pass;
            if (!pass) failure = v.feedback.value_or("the equation does not check out");
        } else {
            auto bindings = make_task_bindings(task);
            std::vector<VerifierBinding*> ptrs;
            for (auto& b : bindings) ptrs.push_back(b.get());
            RecheckReport rep = recheck_trace(r.trace, ptrs);
            pass = rep.sound();
            if (!pass && !rep.failures.empty())
                failure = rep.failures.front().verdict.feedback.value_or(
                    "a reasoning step does not check out");
        }
        if (pass) {
            result.answer = attempt.answer;
            return result;
        }
        prompt += "\n\nYour previous attempt failed: " + failure +
                  ". Solve the problem again from scratch, and re-check every step.\n";
    }
    return result;
}

TreeSearchResult tree_search_24(const std::array<long long, 4>& nums, const TreeProposer& propose,
                                const TreeScorer& score, const TreeSearchOptions& opts,
                                long long target) {
    TreeSearchResult result;
    TreeNode start;
    for (long long n : nums) start.items.push_back({Rational(n), std::to_string(n), false});

    std::vector<TreeNode> frontier = {start};
    for (int depth = 0; depth <= opts.max_depth && !frontier.empty(); ++depth) {
        for (const TreeNode& node : frontier) {
            if (node.items.size() == 1 && node.items[0].value == Rational(target)) {
                result.expression = node.items[0].text;
                return result;
            }
        }
        std::vector<std::pair<TreeRating, TreeNode>> scored;
        for (const TreeNode& node : frontier) {
            if (node.items.size() <= 1) continue;  // dead leaf
            ++result.expanded;
            for (TreeNode& child : propose(node)) {
                TreeRating r = opts.exhaustive ? TreeRating::Likely : score(child);
                if (!opts.exhaustive && r == TreeRating::Impossible) continue;
                scored.emplace_back(r, std::move(child));
            }
        }
        if (!opts.exhaustive) {
            std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
                return static_cast<int>(a.first) > static_cast<int>(b.first);
            });
            if (scored.size() > static_cast<std::size_t>(opts.beam_width))
                scored.resize(opts.beam_width);
        }
        frontier.clear();
        for (auto& [r, node] : scored) frontier.push_back(std::move(node));
    }
    return result;
}

std::vector<TreeNode> propose_all_combinations(const TreeNode& node) {
    std::vector<TreeNode> out;
    for (std::size_t i = 0; i < node.items.size(); ++i) {
        for (std::size_t j = i + 1; j < node.items.size(); ++j) {
            const Rational& a = node.items[i].value;
            const Rational& b = node.items[j].value;
            out.push_back(combine_items(node, i, j, '+', a + b, false));
            out.push_back(combine_items(node, i, j, '*', a * b, false));
            out.push_back(combine_items(node, i, j, '-', a - b, false));
            out.push_back(combine_items(node, i, j, '-', b - a, true));
            if (auto q = checked_div(a, b)) out.push_back(combine_items(node, i, j, '/', *q, false));
            if (auto q = checked_div(b, a)) out.push_back(combine_items(node, i, j, '/', *q, true));
        }
    }
    return out;
}

TreeRating range_heuristic_rating(const TreeNode& node, long long target) {
    if (node.items.empty()) return TreeRating::Impossible;
    if (node.items.size() == 1)
        return node.items[0].value == Rational(target) ? TreeRating::Sure
                                                       : TreeRating::Impossible;
    // Every binary combination of nonnegative x and y stays within
    // (x + 1) * (y + 1), so the product of (|v| + 1) bounds what the
    // remaining numbers can reach.
    double bound = 1.0;
    for (const TreeItem& it : node.items) {
        double v = std::abs(static_cast<double>(it.value.num) / static_cast<double>(it.value.den));
        bound *= v + 1.0;
    }
    if (bound < static_cast<double>(target)) return TreeRating::Impossible;
    if (node.items.size() == 2) {
        TreeNode probe;
        probe.items = node.items;
        for (const TreeNode& child : propose_all_combinations(probe))
            if (child.items[0].value == Rational(target)) return TreeRating::Sure;
        return TreeRating::Unlikely;
    }
    return TreeRating::Likely;
}

TreeProposer make_llm_proposer(Backend& backend, const GenerationParams& params,
                               int* token_counter) {
    return [&backend, params, token_counter](const TreeNode& node) {
        std::ostringstream prompt;
        prompt << "Numbers: " << item_list(node)
               << "\nSuggest ways to combine exactly two of these numbers with +, -, * or /.\n"
                  "Write one candidate per line in the form \"a op b = c\" and nothing else.\n";
        std::string reply = generation_to_string(backend, prompt.str(), params, token_counter);

        std::vector<TreeNode> out;
        std::istringstream lines(reply);
        std::string line;
        while (std::getline(lines, line)) {
            std::size_t eq = line.find('=');
            if (eq == std::string::npos) continue;
            ParseResult lhs = parse_expression(line.substr(0, eq));
            if (!lhs.expr || lhs.expr->op == 0 || !lhs.expr->lhs || !lhs.expr->rhs) continue;
            auto va = evaluate_exact(*lhs.expr->lhs);
            auto vb = evaluate_exact(*lhs.expr->rhs);
            auto total = evaluate_exact(*lhs.expr);
            if (!va || !vb || !total) continue;
            ParseResult rhs = parse_expression(line.substr(eq + 1));
            if (!rhs.expr) continue;
            auto stated = evaluate_exact(*rhs.expr);
            if (!stated || !(*stated == *total)) continue;

            // Map the two operand values onto distinct available items.
            std::optional<std::size_t> ia, ib;
            for (std::size_t k = 0; k < node.items.size(); ++k) {
                if (!ia && node.items[k].value == *va) {
                    ia = k;
                    continue;
                }
                if (!ib && node.items[k].value == *vb) ib = k;
            }
            if (!ia || !ib) continue;
            std::size_t i = std::min(*ia, *ib), j = std::max(*ia, *ib);
            out.push_back(combine_items(node, i, j, lhs.expr->op, *total, *ia > *ib));
        }
        return out;
    };
}

TreeScorer make_llm_scorer(Backend& backend, const GenerationParams& params, int* token_counter) {
    return [&backend, params, token_counter](const TreeNode& node) {
        std::ostringstream prompt;
        prompt << "Numbers: " << item_list(node)
               << "\nCan these numbers reach exactly 24 using +, -, * and /?\n"
                  "Reply with exactly one word: sure, likely, or impossible.\n";
        std::string reply = generation_to_string(backend, prompt.str(), params, token_counter);
        std::string word;
        for (char c : reply) {
            if (std::isalpha(static_cast<unsigned char>(c))) {
                word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            } else if (!word.empty()) {
                break;
            }
        }
        if (word == "sure") return TreeRating::Sure;
        if (word == "likely") return TreeRating::Likely;
        if (word == "impossible") return TreeRating::Impossible;
        return TreeRating::Unlikely;
    };
}

}  // namespace interwhen
