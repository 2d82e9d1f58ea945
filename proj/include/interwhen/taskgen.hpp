#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "interwhen/extraction.hpp"
#include "interwhen/verifier.hpp"

namespace interwhen {

// One generated problem instance: the full prompt handed to the model plus
// the machine-readable pieces needed to verify a trace and score an answer.
struct TaskInstance {
    std::string kind;  // "maze" | "spatial" | "game24"
    std::string id;
    std::string prompt;
    std::string gold;     // option letter, or a reference equation for game24
    nlohmann::json data;  // kind-specific payload (grid, givens, options, ...)
};

// Deterministic in the seed.
TaskInstance generate_maze_task(std::uint64_t seed);
TaskInstance generate_spatial_task(std::uint64_t seed);
TaskInstance generate_game24_task(std::uint64_t seed);
TaskInstance generate_task(const std::string& kind, std::uint64_t seed);

nlohmann::json task_to_json(const TaskInstance& t);
TaskInstance task_from_json(const nlohmann::json& j);

// Verifier bindings wired to this instance (maze walk, relation store,
// equation check). Fresh state; safe to reuse across runs via reset().
std::vector<std::unique_ptr<VerifierBinding>> make_task_bindings(const TaskInstance& t);

// Answer extractor configured for this instance (option letters and texts
// for multiple choice; plain phrases for game24).
std::unique_ptr<Extractor> make_task_answer_extractor(const TaskInstance& t);

// Whether a final answer string solves the task. Multiple-choice answers
// match the gold letter or the gold option text (case-insensitive);
// game24 answers are parsed and checked, not string-compared.
bool answer_matches_gold(const TaskInstance& t, const std::string& answer);

}  // namespace interwhen
