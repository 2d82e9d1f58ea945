#include "interwhen/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "interwhen/game24.hpp"
#include "interwhen/http_backend.hpp"
#include "interwhen/maze.hpp"
#include "interwhen/mock_backend.hpp"
#include "interwhen/search.hpp"
#include "interwhen/spatial.hpp"
#include "interwhen/stopping.hpp"

namespace interwhen {

namespace {

using nlohmann::json;

// ----------------------------------------------------------- scripting ----

// Splits text into small token chunks so the scripted stream exercises the
// same partial-state handling a real token stream does.
std::vector<std::string> chunk_tokens(std::mt19937_64& rng, const std::string& text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t n = 1 + rng() % 6;
        n = std::min(n, text.size() - i);
        out.push_back(text.substr(i, n));
        i += n;
    }
    return out;
}

struct SynthParts {
    std::vector<std::string> blocks;          // correct reasoning blocks, "\n\n"-ended
    std::vector<std::size_t> corruptible;     // block indices that can go wrong
    std::vector<std::string> corrupted;       // parallel to corruptible
    std::string final_good;                   // closing restatements + final answer
    std::string bad_tail;                     // hasty wrong conclusion + wrong answer
    std::string end_answer;                   // after a forced think close
    std::string end_answer_bad;
};

std::string first_wrong_letter(const TaskInstance& task) {
    for (const auto& [k, v] : task.data.at("options").items())
        if (k != task.gold) return k;
    return "Z";
}

SynthParts synth_maze(const TaskInstance& task) {
    SynthParts parts;
    MazeGrid grid{task.data.at("grid").get<std::vector<std::string>>()};
    auto path = walk_path(grid);
    if (!path) throw std::logic_error("maze task has no walkable path");

    GridPos s = path->cells.front();
    GridPos e = path->cells.back();
    std::ostringstream locate;
    locate << ">>> LOCATE START AND EXIT\nS position: " << to_string(s)
           << "\nE position: " << to_string(e) << "\n\n";
    parts.blocks.push_back(locate.str());

    int right = 0, left = 0;
    for (std::size_t i = 1; i < path->cells.size(); ++i) {
        Direction dir = path->dirs[i - 1];
        TurnType turn = i == 1 ? TurnType::Straight : classify_turn(path->dirs[i - 2], dir);
        if (turn == TurnType::RightTurn) ++right;
        if (turn == TurnType::LeftTurn) ++left;
        auto block = [&](TurnType shown_turn, int shown_right, int shown_left) {
            std::ostringstream os;
            os << ">>> STEP " << i << ": Move " << direction_name(dir) << " from "
               << to_string(path->cells[i - 1]) << " to " << to_string(path->cells[i]) << "\n"
               << "Current position: " << to_string(path->cells[i]) << "\n"
               << "Previous direction: "
               << (i == 1 ? std::string("none") : std::string(direction_name(path->dirs[i - 2])))
               << "\n"
               << "Current direction: " << direction_name(dir) << "\n"
               << "Turn type: "
               << (shown_turn == TurnType::RightTurn ? "RIGHT"
                   : shown_turn == TurnType::LeftTurn ? "LEFT"
                   : shown_turn == TurnType::Straight ? "STRAIGHT"
                                                      : "REVERSAL")
               << "\n"
               << "Running count: Right=" << shown_right << ", Left=" << shown_left << "\n\n";
            return os.str();
        };
        parts.blocks.push_back(block(turn, right, left));
        if (i >= 2) {
            TurnType wrong = turn == TurnType::RightTurn ? TurnType::LeftTurn
                                                         : TurnType::RightTurn;
            int wr = right, wl = left;
            if (turn == TurnType::RightTurn) --wr;
            if (turn == TurnType::LeftTurn) --wl;
            if (wrong == TurnType::RightTurn) ++wr;
            if (wrong == TurnType::LeftTurn) ++wl;
            parts.corruptible.push_back(parts.blocks.size() - 1);
            parts.corrupted.push_back(block(wrong, wr, wl));
        }
    }

    const std::string& gold = task.gold;
    std::ostringstream good;
    good << "I count Right=" << right << ", Left=" << left << ", which matches option " << gold
         << ".\n\nSo the answer is " << gold << ". \\boxed{" << gold << "}\n\n"
         << "Let me re-check the running count once more to be safe; the walk gives Right="
         << right << ", Left=" << left << " again.\n\nSo the answer is " << gold << ". \\boxed{"
         << gold << "}\n\nthe answer is " << gold << "\n";
    parts.final_good = good.str();

    std::string wrong = first_wrong_letter(task);
    parts.bad_tail = "The counts point at option " + wrong + ".\n\nthe answer is " + wrong + "\n";
    parts.end_answer = " " + gold + "\n";
    parts.end_answer_bad = " " + wrong + "\n";
    return parts;
}

SynthParts synth_spatial(const TaskInstance& task) {
    SynthParts parts;
    auto entities = task.data.at("entities").get<std::vector<std::string>>();
    std::vector<DiagRelation> givens;
    for (const auto& g : task.data.at("givens")) {
        DiagRelation rel;
        rel.subject = g.at("subject").get<std::string>();
        rel.object = g.at("object").get<std::string>();
        rel.dir = *parse_diag(g.at("dir").get<std::string>());
        givens.push_back(rel);
    }
    std::ostringstream gv;
    gv << ">>> STEP 1: PARSE RELATIONSHIPS\n";
    for (const DiagRelation& g : givens)
        gv << "- " << g.subject << " is to the " << diag_name(g.dir) << " of " << g.object
           << "\n";
    gv << "\n";
    parts.blocks.push_back(gv.str());
    parts.blocks.push_back(">>> STEP 2: DERIVE RELATIONSHIPS\n\n");

    RelationStore store;
    for (const DiagRelation& g : givens) store.assert_relation(g);

    std::string q_subject = task.data.at("question").at("subject").get<std::string>();
    std::string q_object = task.data.at("question").at("object").get<std::string>();
    auto stated = [&](const std::string& a, const std::string& b) {
        for (const DiagRelation& g : givens)
            if ((g.subject == a && g.object == b) || (g.subject == b && g.object == a))
                return true;
        return false;
    };

    // A couple of honestly entailed intermediate conclusions.
    int emitted = 0;
    for (std::size_t i = 0; i < entities.size() && emitted < 2; ++i) {
        for (std::size_t j = 0; j < entities.size() && emitted < 2; ++j) {
            if (i == j) continue;
            const std::string& a = entities[i];
            const std::string& b = entities[j];
            if (stated(a, b)) continue;
            if ((a == q_subject && b == q_object) || (a == q_object && b == q_subject)) continue;
            auto ent = entailed_diag(store, a, b);
            if (!ent) continue;
            auto conclusion = [&](Diag d) {
                return "Combining the clues, " + a + " is " + std::string(diag_name(d)) + " of " +
                       b + ".\n\n";
            };
            parts.blocks.push_back(conclusion(*ent));
            parts.corruptible.push_back(parts.blocks.size() - 1);
            parts.corrupted.push_back(conclusion(opposite(*ent)));
            ++emitted;
        }
    }

    auto gold_rel = entailed_diag(store, q_subject, q_object);
    if (!gold_rel) throw std::logic_error("spatial task question is not entailed");
    auto question_line = [&](Diag d) {
        return "Therefore " + q_subject + " is " + std::string(diag_name(d)) + " of " + q_object +
               ".\n\n";
    };
    parts.blocks.push_back(question_line(*gold_rel));
    parts.corruptible.push_back(parts.blocks.size() - 1);
    parts.corrupted.push_back(question_line(opposite(*gold_rel)));

    const std::string& gold = task.gold;
    std::ostringstream good;
    good << "That matches option " << gold << ".\n\nSo the answer is " << gold << ". \\boxed{"
         << gold << "}\n\nReading the chain once more gives the same relation.\n\nSo the answer is "
         << gold << ". \\boxed{" << gold << "}\n\nthe answer is " << gold << "\n";
    parts.final_good = good.str();

    // The wrong continuation answers with the flipped relation's letter.
    std::string wrong = first_wrong_letter(task);
    for (const auto& [letter, text] : task.data.at("options").items())
        if (text.get<std::string>() == diag_name(opposite(*gold_rel))) wrong = letter;
    parts.bad_tail =
        "That matches option " + wrong + ".\n\nthe answer is " + wrong + "\n";
    parts.end_answer = " " + gold + "\n";
    parts.end_answer_bad = " " + wrong + "\n";
    return parts;
}

SynthParts synth_game24(const TaskInstance& task) {
    SynthParts parts;
    auto nums = task.data.at("numbers").get<std::vector<long long>>();
    const std::string& witness = task.gold;

    std::ostringstream intro;
    intro << "I need to reach 24 using " << nums[0] << ", " << nums[1] << ", " << nums[2]
          << " and " << nums[3]
          << ", each exactly once. Let me try complete candidates and check every one.\n\n";
    parts.blocks.push_back(intro.str());

    // Wrong-but-plausible full candidates: right numbers, wrong value.
    auto a = std::to_string(nums[0]), b = std::to_string(nums[1]), c = std::to_string(nums[2]),
         d = std::to_string(nums[3]);
    std::vector<std::string> wrong_forms = {
        a + " + " + b + " + " + c + " + " + d,
        a + " + " + b + " + " + c + " - " + d,
        a + " * " + b + " + " + c + " + " + d,
        a + " + " + b + " * " + c + " + " + d,
        "(" + a + " + " + b + ") * (" + c + " + " + d + ")",
        a + " * " + b + " - " + c + " - " + d,
    };
    std::vector<std::string> wrongs;
    for (const std::string& w : wrong_forms) {
        if (wrongs.size() >= 2) break;
        ParseResult p = parse_expression(w);
        if (!p.expr) continue;
        auto v = evaluate_exact(*p.expr);
        if (!v || *v == Rational(24)) continue;
        if (w == witness) continue;
        wrongs.push_back(w);
    }
    while (wrongs.size() < 2) wrongs.push_back(a + " + " + b + " + " + c + " + " + d);

    for (const std::string& w : wrongs) {
        parts.blocks.push_back(
            "That route stalls, so I will try a different decomposition next.\n\n");
        parts.corruptible.push_back(parts.blocks.size() - 1);
        parts.corrupted.push_back("Maybe this works: " + w + " = 24.\n\n");
    }
    parts.blocks.push_back("Found one that checks out exactly: " + witness + " = 24.\n\n");

    std::ostringstream good;
    good << "the answer is " << witness << "\n\n\\boxed{" << witness << "}\n\n"
         << "A final re-check: " << witness << " = 24. Confirmed.\n\nthe answer is " << witness
         << "\n";
    parts.final_good = good.str();

    parts.bad_tail = "It seems right, so I will go with it.\n\nthe answer is " + wrongs[0] + "\n";
    parts.end_answer = " " + witness + "\n";
    parts.end_answer_bad = " " + wrongs[0] + "\n";
    return parts;
}

// Per-boundary probe tables covering the clean reasoning path. Before the
// answer is derived (boundaries left of late_start) the end-of-thought
// entropy falls from ~0.69 to ~0.17 while never dropping below 0.1, and the
// answer-token confidence rises from 0.50 to 0.94 with the model guessing
// wrong; once the answer exists, entropy sits at ~0.03 and the confidence at
// 0.99 on the right answer. Aggressive stop thresholds therefore fire in the
// wrong-guess region and lose accuracy, while moderate ones save the closing
// restatements at full accuracy.
json probe_tables(const std::string& clean_text, std::size_t answer_known,
                  const std::string& gold_token, const std::string& wrong_token) {
    std::vector<std::size_t> bpos = chunk_boundaries(clean_text);
    if (bpos.empty()) bpos.push_back(clean_text.size());
    std::size_t n_early = 0;
    for (std::size_t b : bpos)
        if (b < answer_known) ++n_early;

    json eat_calls = json::array();
    json deer_calls = json::array();
    for (std::size_t i = 0; i < bpos.size(); ++i) {
        bool late = bpos[i] >= answer_known;
        double t = n_early > 1 ? static_cast<double>(i) / (n_early - 1) : 1.0;
        double p_top = late ? 0.995 : 0.55 + t * (0.96 - 0.55);
        double conf = late ? 0.99 : 0.50 + t * (0.94 - 0.50);
        const std::string& tok = late ? gold_token : wrong_token;

        json dist = json::array();
        dist.push_back({tok, std::log(p_top)});
        dist.push_back({" hmm", std::log(1.0 - p_top)});
        eat_calls.push_back(json::array({dist}));

        json d1 = json::array();
        d1.push_back({tok, std::log(conf)});
        d1.push_back({" perhaps", std::log(1.0 - conf)});
        json d2 = json::array();
        d2.push_back({"\n", -0.01});
        d2.push_back({".", -4.6});
        deer_calls.push_back(json::array({d1, d2}));
    }
    json probes = json::array();
    probes.push_back({{"suffix", "</think>"}, {"calls", eat_calls}});
    probes.push_back({{"suffix", "</think> The answer is"}, {"calls", deer_calls}});
    return probes;
}

}  // namespace

json synthesize_reasoner_script(const TaskInstance& task, std::uint64_t seed, int mistakes) {
    SynthParts parts;
    if (task.kind == "maze")
        parts = synth_maze(task);
    else if (task.kind == "spatial")
        parts = synth_spatial(task);
    else if (task.kind == "game24")
        parts = synth_game24(task);
    else
        throw std::invalid_argument("unknown task kind: " + task.kind);

    std::mt19937_64 rng(seed ^ 0xabcdef1234567890ULL);
    int m = std::min<int>(mistakes, static_cast<int>(parts.corruptible.size()));

    // The chosen mistakes are the last m corruptible blocks, so the wrong
    // path always ends wrong (the final conclusion is among them).
    std::vector<std::size_t> picks(parts.corruptible.end() - m, parts.corruptible.end());
    std::vector<std::string> corrupted(parts.corrupted.end() - m, parts.corrupted.end());

    json nodes = json::object();
    auto node = [&](const std::string& text, std::optional<std::string> next,
                    std::optional<std::string> on_feedback, const std::string& end_target) {
        json n;
        n["tokens"] = chunk_tokens(rng, text);
        if (next) n["next"] = *next;
        json branches = json::object();
        if (on_feedback) branches["*"] = *on_feedback;
        branches["__end_think__"] = end_target;
        n["branches"] = branches;
        return n;
    };

    // The answer only exists once the last reasoning block is done; a think
    // phase forced shut before that point yields the model's wrong guess.
    std::string late_text = parts.blocks.back() + parts.final_good;
    std::size_t late_start = 0;
    for (std::size_t b = 0; b + 1 < parts.blocks.size(); ++b) late_start += parts.blocks[b].size();

    if (m == 0) {
        std::string text;
        for (std::size_t b = 0; b + 1 < parts.blocks.size(); ++b) text += parts.blocks[b];
        nodes["seg0"] = node(text, "late", std::nullopt, "end_bad");
        nodes["late"] = node(late_text, std::nullopt, std::nullopt, "end");
    } else {
        // seg0 runs up to and including the first corrupted block; each fix_j
        // redoes block picks[j] correctly and runs to the next corruption.
        std::string text;
        for (std::size_t b = 0; b < picks[0]; ++b) text += parts.blocks[b];
        text += corrupted[0];
        nodes["seg0"] = node(text, "bad0", "fix0", "end_bad");
        for (int j = 0; j < m; ++j) {
            // Starts on a fresh line: the redo block must not share a line
            // with the tail of the injected feedback.
            std::string fix = "\n\n";
            std::size_t stop = j + 1 < m ? picks[j + 1] : parts.blocks.size();
            for (std::size_t b = picks[j]; b < stop; ++b) fix += parts.blocks[b];
            if (j + 1 < m) {
                fix += corrupted[j + 1];
                nodes["fix" + std::to_string(j)] = node(fix, "bad" + std::to_string(j + 1),
                                                        "fix" + std::to_string(j + 1), "end_bad");
            } else {
                fix += parts.final_good;
                nodes["fix" + std::to_string(j)] = node(fix, std::nullopt, std::nullopt, "end");
            }
            nodes["bad" + std::to_string(j)] =
                node(parts.bad_tail, std::nullopt, std::nullopt, "end_bad");
        }
    }
    nodes["end"] = node(parts.end_answer, std::nullopt, std::nullopt, "end");
    nodes["end_bad"] = node(parts.end_answer_bad, std::nullopt, std::nullopt, "end_bad");

    std::string clean_text;
    for (const std::string& b : parts.blocks) clean_text += b;
    clean_text += parts.final_good;

    json script;
    script["start"] = "seg0";
    if (m > 0) {
        // Fresh attempts after the first reason cleanly, so retry-style
        // baselines (best-of-k, majority, generate-test) can recover without
        // feedback; two clean entries let odd-k majority outvote the flawed
        // first attempt.
        nodes["clean"] = node(clean_text, std::nullopt, std::nullopt, "end");
        script["attempts"] = json::array({"seg0", "clean", "clean"});
    }
    script["nodes"] = std::move(nodes);
    std::string wrong_token = parts.end_answer_bad;
    if (!wrong_token.empty() && wrong_token.back() == '\n') wrong_token.pop_back();
    // The answer exists only after the whole last reasoning block streamed;
    // the boundary at that block's own start still sees a guessing model.
    std::size_t answer_known = late_start + parts.blocks.back().size();
    script["probes"] = probe_tables(clean_text, answer_known, " " + task.gold, wrong_token);
    return script;
}

// -------------------------------------------------------------- config ----

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    c.kind = j.value("kind", c.kind);
    c.method = j.value("method", c.method);
    c.instances = j.value("instances", c.instances);
    c.seed = j.value("seed", c.seed);
    c.k = j.value("k", c.k);
    c.threshold = j.value("threshold", c.threshold);
    c.alpha = j.value("alpha", c.alpha);
    c.max_rounds = j.value("max_rounds", c.max_rounds);
    c.max_interventions = j.value("max_interventions", c.max_interventions);
    c.workers = j.value("workers", c.workers);
    c.synthetic_mistakes = j.value("synthetic_mistakes", c.synthetic_mistakes);
    c.with_feedback = j.value("with_feedback", c.with_feedback);
    c.backend = j.value("backend", c.backend);
    c.script_path = j.value("script_path", c.script_path);
    c.instances_path = j.value("instances_path", c.instances_path);
    c.preset = j.value("preset", c.preset);
    if (!c.preset.empty()) c.params = preset_params(c.preset);
    if (j.contains("params")) {
        const json& p = j["params"];
        c.params.temperature = p.value("temperature", c.params.temperature);
        c.params.top_p = p.value("top_p", c.params.top_p);
        c.params.top_k = p.value("top_k", c.params.top_k);
        c.params.max_tokens = p.value("max_tokens", c.params.max_tokens);
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    return {{"name", c.name},
            {"kind", c.kind},
            {"method", c.method},
            {"instances", c.instances},
            {"seed", c.seed},
            {"k", c.k},
            {"threshold", c.threshold},
            {"alpha", c.alpha},
            {"max_rounds", c.max_rounds},
            {"max_interventions", c.max_interventions},
            {"workers", c.workers},
            {"synthetic_mistakes", c.synthetic_mistakes},
            {"with_feedback", c.with_feedback},
            {"backend", c.backend},
            {"script_path", c.script_path},
            {"instances_path", c.instances_path},
            {"preset", c.preset},
            {"params",
             {{"temperature", c.params.temperature},
              {"top_p", c.params.top_p},
              {"top_k", c.params.top_k},
              {"max_tokens", c.params.max_tokens}}}};
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    return config_from_json(json::parse(in));
}

// -------------------------------------------------------------- records ---

int RunRecord::feedback_injections() const {
    int n = 0;
    if (interventions.is_array())
        for (const auto& iv : interventions)
            if (iv.value("action", "") == "inject_text") ++n;
    return n;
}

json record_to_json(const RunRecord& r) {
    json j;
    j["instance_id"] = r.instance_id;
    j["method"] = r.method;
    j["final_answer"] = r.final_answer;
    j["correct"] = r.correct;
    j["abstained"] = r.abstained;
    if (r.sound) j["sound"] = *r.sound;
    j["model_tokens"] = r.model_tokens;
    j["injected_tokens"] = r.injected_tokens;
    j["probe_tokens"] = r.probe_tokens;
    j["interventions"] = r.interventions;
    j["states_checked"] = r.states_checked;
    j["wall_ms"] = r.wall_ms;
    j["seed"] = r.seed;
    if (r.stop_reason) j["stop_reason"] = *r.stop_reason;
    if (r.error) j["error"] = *r.error;
    j["task"] = r.task;
    if (!r.segments.is_null()) j["segments"] = r.segments;
    if (!r.attempts.is_null()) j["attempts"] = r.attempts;
    return j;
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    r.instance_id = j.value("instance_id", "");
    r.method = j.value("method", "");
    r.final_answer = j.value("final_answer", "NO_ANSWER");
    r.correct = j.value("correct", false);
    r.abstained = j.value("abstained", false);
    if (j.contains("sound")) r.sound = j["sound"].get<bool>();
    r.model_tokens = j.value("model_tokens", 0);
    r.injected_tokens = j.value("injected_tokens", 0);
    r.probe_tokens = j.value("probe_tokens", 0);
    r.interventions = j.value("interventions", json::array());
    r.states_checked = j.value("states_checked", 0);
    r.wall_ms = j.value("wall_ms", 0LL);
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("stop_reason")) r.stop_reason = j["stop_reason"].get<std::string>();
    if (j.contains("error")) r.error = j["error"].get<std::string>();
    r.task = j.value("task", json::object());
    r.segments = j.value("segments", json());
    r.attempts = j.value("attempts", json());
    return r;
}

ReasoningTrace trace_from_record(const RunRecord& r) {
    std::string prompt;
    if (r.task.contains("prompt")) prompt = r.task["prompt"].get<std::string>();
    ReasoningTrace trace(prompt);
    if (r.segments.is_array()) {
        for (const auto& seg : r.segments) {
            std::string text = seg.value("text", "");
            if (seg.value("origin", "model") == "model")
                trace.append_model_token(text);
            else
                trace.append_intervention(text);
        }
    }
    return trace;
}

bool recheck_record(const RunRecord& r, RecheckReport* out) {
    TaskInstance task = task_from_json(r.task);
    auto bindings = make_task_bindings(task);
    std::vector<VerifierBinding*> ptrs;
    for (auto& b : bindings) ptrs.push_back(b.get());
    ReasoningTrace trace = trace_from_record(r);
    RecheckReport rep = recheck_trace(trace, ptrs);
    if (out) *out = rep;
    return rep.sound();
}

// ---------------------------------------------------------- run logic -----

namespace {

json segments_to_json(const ReasoningTrace& trace) {
    json out = json::array();
    for (const Segment& s : trace.segments())
        out.push_back({{"origin", s.origin == SegmentOrigin::Model ? "model" : "intervention"},
                       {"text", s.text}});
    return out;
}

json attempts_to_json(const BaselineResult& br) {
    json out = json::array();
    for (const AttemptRecord& a : br.attempts)
        out.push_back({{"answer", a.answer},
                       {"model_tokens", a.model_tokens},
                       {"injected_tokens", a.injected_tokens},
                       {"trace_text", a.trace_text}});
    return out;
}

const char* action_name(ActionKind kind) {
    switch (kind) {
        case ActionKind::InjectText: return "inject_text";
        case ActionKind::InjectEndThink: return "inject_end_think";
        case ActionKind::Halt: return "halt";
        default: return "continue";
    }
}

json interventions_to_json(const MonitorResult& result) {
    json out = json::array();
    for (const InterventionRecord& iv : result.interventions)
        out.push_back({{"action", action_name(iv.kind)},
                       {"position", iv.position},
                       {"feedback", iv.text},
                       {"reason", iv.reason}});
    return out;
}

std::uint64_t task_seed(const TaskInstance& task) {
    if (task.data.contains("seed")) return task.data["seed"].get<std::uint64_t>();
    return std::hash<std::string>{}(task.id);
}

bool method_uses_bindings(const ExperimentConfig& cfg) {
    if (cfg.method == "monitored" || cfg.method == "generate_test") return true;
    if (cfg.with_feedback &&
        (cfg.method == "k_stable" || cfg.method == "dual_k_stable" || cfg.method == "eat" ||
         cfg.method == "deer"))
        return true;
    return false;
}

std::unique_ptr<StoppingMonitor> make_stopper(const ExperimentConfig& cfg,
                                              const TaskInstance& task) {
    if (cfg.method == "k_stable")
        return make_k_stable_monitor(cfg.k, make_task_answer_extractor(task));
    if (cfg.method == "dual_k_stable") {
        AnswerExtractorOptions boxed_only;
        boxed_only.phrases.clear();
        boxed_only.letters.clear();
        return make_dual_k_stable_monitor(cfg.k, make_task_answer_extractor(task),
                                          make_answer_extractor(std::move(boxed_only)));
    }
    if (cfg.method == "eat") {
        EntropyStopOptions opts;
        opts.threshold = cfg.threshold;
        opts.alpha = cfg.alpha;
        return make_entropy_stop_monitor(opts);
    }
    if (cfg.method == "deer") {
        ConfidenceStopOptions opts;
        opts.threshold = cfg.threshold;
        return make_confidence_stop_monitor(opts);
    }
    return nullptr;
}

RunRecord record_from_baseline(const TaskInstance& task, const ExperimentConfig& cfg,
                               const BaselineResult& br) {
    RunRecord rec;
    rec.instance_id = task.id;
    rec.method = cfg.method;
    rec.final_answer = br.answer.empty() ? "NO_ANSWER" : br.answer;
    rec.correct = !br.answer.empty() && answer_matches_gold(task, br.answer);
    rec.model_tokens = br.total_model_tokens();
    rec.injected_tokens = br.total_injected_tokens();
    rec.task = task_to_json(task);
    rec.attempts = attempts_to_json(br);
    return rec;
}

RunRecord run_instance_inner(Backend& backend, const TaskInstance& task,
                             const ExperimentConfig& cfg) {
    if (cfg.method == "single")
        return record_from_baseline(task, cfg, run_single_baseline(backend, task, cfg.params));
    if (cfg.method == "best_of_k")
        return record_from_baseline(task, cfg, best_of_k(backend, task, cfg.params, cfg.k));
    if (cfg.method == "majority")
        return record_from_baseline(task, cfg, majority_vote(backend, task, cfg.params, cfg.k));
    if (cfg.method == "generate_test")
        return record_from_baseline(task, cfg,
                                    generate_test_loop(backend, task, cfg.params, cfg.max_rounds));

    bool with_bindings = method_uses_bindings(cfg);
    std::vector<std::unique_ptr<VerifierBinding>> bindings;
    std::vector<VerifierBinding*> ptrs;
    if (with_bindings) {
        bindings = make_task_bindings(task);
        for (auto& b : bindings) ptrs.push_back(b.get());
    }
    std::unique_ptr<StoppingMonitor> stopper = make_stopper(cfg, task);
    if (cfg.method != "monitored" && !stopper)
        throw std::invalid_argument("unknown method: " + cfg.method);

    MonitorConfig mcfg;
    mcfg.max_interventions = cfg.max_interventions;
    MonitorResult result =
        run_monitored_generation(backend, task.prompt, cfg.params, ptrs, stopper.get(), mcfg);

    RunRecord rec;
    rec.instance_id = task.id;
    rec.method = cfg.method;
    rec.abstained = result.aborted;
    rec.model_tokens = result.trace.model_tokens();
    rec.injected_tokens = result.trace.injected_tokens();
    rec.probe_tokens = result.probe_tokens;
    rec.states_checked = static_cast<int>(result.states.size());
    rec.interventions = interventions_to_json(result);
    rec.stop_reason = result.stop_reason;
    if (result.backend_error) rec.error = "backend: " + *result.backend_error;
    rec.task = task_to_json(task);
    rec.segments = segments_to_json(result.trace);

    if (!rec.abstained) {
        std::string answer;
        if (result.resolved_answer) {
            answer = *result.resolved_answer;
        } else {
            auto answer_ex = make_task_answer_extractor(task);
            answer = resolve_final_answer(result.trace.full_text(), *answer_ex);
        }
        if (!answer.empty()) rec.final_answer = answer;
        rec.correct = !answer.empty() && answer_matches_gold(task, answer);
        if (with_bindings) rec.sound = recheck_record(rec);
    }
    return rec;
}

}  // namespace

bool stopping_only(const ExperimentConfig& cfg) {
    return !cfg.with_feedback &&
           (cfg.method == "k_stable" || cfg.method == "dual_k_stable" || cfg.method == "eat" ||
            cfg.method == "deer");
}

RunRecord run_instance(Backend& backend, const TaskInstance& task, const ExperimentConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    RunRecord rec = run_instance_inner(backend, task, cfg);
    rec.seed = task_seed(task);
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return rec;
}

std::vector<RunRecord> load_records(const std::string& log_path) {
    std::vector<RunRecord> out;
    std::ifstream in(log_path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception&) {
            // torn line from an interrupted run; the instance reruns
        }
    }
    return out;
}

std::vector<TaskInstance> load_instances(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file " + path);
    std::vector<TaskInstance> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(task_from_json(json::parse(line)));
    }
    return out;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const std::string& log_path) {
    std::vector<TaskInstance> tasks;
    if (!cfg.instances_path.empty()) {
        tasks = load_instances(cfg.instances_path);
        if (cfg.instances > 0 && static_cast<std::size_t>(cfg.instances) < tasks.size())
            tasks.resize(cfg.instances);
    } else {
        for (int i = 0; i < cfg.instances; ++i)
            tasks.push_back(generate_task(cfg.kind, cfg.seed + static_cast<std::uint64_t>(i)));
    }

    std::vector<RunRecord> records = load_records(log_path);
    std::set<std::string> done;
    for (const RunRecord& r : records) done.insert(r.instance_id);

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (!done.count(tasks[i].id)) pending.push_back(i);
    if (pending.empty()) return records;

    int effective_mistakes = stopping_only(cfg) ? 0 : cfg.synthetic_mistakes;

    auto make_backend = [&](const TaskInstance& task) -> std::unique_ptr<Backend> {
        if (cfg.backend == "http") return make_http_backend(http_config_from_env());
        if (!cfg.script_path.empty()) return load_mock_backend(cfg.script_path);
        std::uint64_t script_seed = cfg.seed * 1000003ULL + task_seed(task);
        return make_mock_backend(synthesize_reasoner_script(task, script_seed, effective_mistakes));
    };

    std::ofstream out(log_path, std::ios::app);
    std::mutex mu;
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        for (;;) {
            std::size_t w = next.fetch_add(1);
            if (w >= pending.size()) return;
            const TaskInstance& task = tasks[pending[w]];
            RunRecord rec;
            try {
                auto backend = make_backend(task);
                rec = run_instance(*backend, task, cfg);
            } catch (const std::exception& e) {
                rec = RunRecord{};
                rec.instance_id = task.id;
                rec.method = cfg.method;
                rec.error = e.what();
                rec.seed = task_seed(task);
                rec.task = task_to_json(task);
            }
            std::lock_guard<std::mutex> lock(mu);
            out << record_to_json(rec).dump() << "\n";
            out.flush();
            records.push_back(std::move(rec));
        }
    };

    int n_workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(pending.size())));
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    return records;
}

Aggregate aggregate_records(const std::vector<RunRecord>& records) {
    Aggregate agg;
    for (const RunRecord& r : records) {
        ++agg.runs;
        if (r.correct) ++agg.correct;
        if (r.abstained) ++agg.abstained;
        agg.model_tokens += r.model_tokens;
        agg.injected_tokens += r.injected_tokens;
        agg.probe_tokens += r.probe_tokens;
        agg.interventions += r.feedback_injections();
        if (r.sound) {
            ++agg.sound_checked;
            if (*r.sound) ++agg.sound_pass;
        }
    }
    return agg;
}

double token_percent(const Aggregate& treatment, const Aggregate& baseline) {
    if (baseline.model_tokens == 0) return 0.0;
    return 100.0 * static_cast<double>(treatment.model_tokens) /
           static_cast<double>(baseline.model_tokens);
}

std::vector<ReportRow> make_report(const std::vector<RunRecord>& baseline,
                                   const std::vector<RunRecord>& treatment) {
    std::set<std::string> base_ids, treat_ids;
    for (const RunRecord& r : baseline) base_ids.insert(r.instance_id);
    for (const RunRecord& r : treatment) treat_ids.insert(r.instance_id);
    if (base_ids != treat_ids) {
        std::string diff;
        for (const auto& id : base_ids)
            if (!treat_ids.count(id)) diff += " -" + id;
        for (const auto& id : treat_ids)
            if (!base_ids.count(id)) diff += " +" + id;
        throw std::invalid_argument("logs cover different instances:" + diff);
    }

    Aggregate base_agg = aggregate_records(baseline);
    auto row_for = [&](const std::string& method, const std::vector<RunRecord>& records) {
        std::vector<RunRecord> subset;
        for (const RunRecord& r : records)
            if (r.method == method) subset.push_back(r);
        Aggregate agg = aggregate_records(subset);
        ReportRow row;
        row.method = method;
        row.n = agg.runs;
        row.accuracy_pct = 100.0 * agg.accuracy();
        row.tokens_pct = token_percent(agg, base_agg);
        row.abstained = agg.abstained;
        if (agg.sound_checked > 0) row.soundness_pct = 100.0 * agg.soundness();
        return row;
    };

    std::vector<ReportRow> rows;
    std::vector<std::string> seen;
    for (const RunRecord& r : baseline)
        if (std::find(seen.begin(), seen.end(), r.method) == seen.end())
            seen.push_back(r.method);
    for (const std::string& m : seen) rows.push_back(row_for(m, baseline));
    std::vector<std::string> treat_methods;
    for (const RunRecord& r : treatment)
        if (std::find(treat_methods.begin(), treat_methods.end(), r.method) ==
            treat_methods.end())
            treat_methods.push_back(r.method);
    for (const std::string& m : treat_methods) rows.push_back(row_for(m, treatment));
    return rows;
}

std::vector<double> sweep_default_values(const std::string& dimension) {
    if (dimension == "k") return {2, 3, 4, 5, 6, 7, 10, 15, 100};
    if (dimension == "eat_threshold" || dimension == "threshold")
        return {0.2, 0.1, 0.04, 0.008, 0.005, 0.003, 0.001, 1e-4};
    if (dimension == "deer_threshold")
        return {0.85, 0.9, 0.93, 0.95, 0.97, 0.98, 0.99, 0.995};
    if (dimension == "alpha") return {0.1, 0.3, 0.5, 0.7, 1.0};
    throw std::invalid_argument("unknown sweep dimension: " + dimension);
}

std::vector<SweepPoint> run_sweep(ExperimentConfig cfg, const std::string& dimension,
                                  const std::vector<double>& values, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<SweepPoint> points;
    for (double v : values) {
        ExperimentConfig c = cfg;
        std::ostringstream tag;
        if (dimension == "k") {
            c.k = static_cast<int>(v);
            tag << c.k;
        } else if (dimension == "eat_threshold") {
            c.method = "eat";
            c.threshold = v;
            tag << v;
        } else if (dimension == "deer_threshold") {
            c.method = "deer";
            c.threshold = v;
            tag << v;
        } else if (dimension == "threshold") {
            c.threshold = v;
            tag << v;
        } else if (dimension == "alpha") {
            c.alpha = v;
            tag << v;
        } else {
            throw std::invalid_argument("unknown sweep dimension: " + dimension);
        }
        std::string log_path = out_dir + "/" + c.name + "-" + dimension + "-" + tag.str() +
                               ".jsonl";
        auto records = run_experiment(c, log_path);
        points.push_back({v, aggregate_records(records), log_path});
    }
    return points;
}

std::optional<std::size_t> select_sweep_point(const std::vector<SweepPoint>& points,
                                              double baseline_accuracy) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].agg.accuracy() + 1e-9 < baseline_accuracy) continue;
        if (!best || points[i].agg.model_tokens < points[*best].agg.model_tokens) best = i;
    }
    return best;
}

}  // namespace interwhen
