#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "interwhen/backend.hpp"
#include "interwhen/monitor.hpp"
#include "interwhen/taskgen.hpp"

namespace interwhen {

struct ExperimentConfig {
    std::string name = "experiment";
    std::string kind = "game24";
    // single | monitored | best_of_k | majority | generate_test |
    // k_stable | dual_k_stable | eat | deer
    std::string method = "monitored";
    int instances = 10;
    std::uint64_t seed = 1;  // instance i uses seed + i
    int k = 2;               // best_of_k / majority / k_stable family
    double threshold = 0.04; // eat / deer
    double alpha = 0.3;      // eat EMA weight
    int max_rounds = 3;      // generate_test retries
    int max_interventions = 8;
    int workers = 1;
    // Mistakes spliced into synthesized mock scripts. Methods that cannot
    // catch mistakes (pure early-stopping without feedback) always get
    // clean scripts.
    int synthetic_mistakes = 1;
    bool with_feedback = false;  // run verifier bindings alongside a stopper
    std::string backend = "mock";  // mock | http
    std::string script_path;       // fixed mock script; empty = synthesize
    std::string instances_path;    // pre-generated instance JSONL; empty = generate
    std::string preset;            // decoding preset for the http backend
    GenerationParams params;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

// One line of the experiment log. Self-contained: the full task and the
// final trace segments are embedded, so a log can be re-verified without
// regenerating anything.
struct RunRecord {
    std::string instance_id;
    std::string method;
    std::string final_answer = "NO_ANSWER";
    bool correct = false;
    bool abstained = false;     // the run gave up (intervention budget)
    std::optional<bool> sound;  // trace re-verification; absent when abstained
                                // or when the method carries no verifiers
    int model_tokens = 0;
    int injected_tokens = 0;
    int probe_tokens = 0;
    // [{action, position, feedback, reason}, ...]
    nlohmann::json interventions = nlohmann::json::array();
    int states_checked = 0;
    long long wall_ms = 0;
    std::uint64_t seed = 0;
    std::optional<std::string> stop_reason;
    std::optional<std::string> error;
    nlohmann::json task;               // task_to_json of the instance
    nlohmann::json segments;           // [{origin, text}, ...]
    nlohmann::json attempts;           // sampling methods: per-attempt info

    bool has_answer() const { return final_answer != "NO_ANSWER" && !final_answer.empty(); }
    int feedback_injections() const;
};

nlohmann::json record_to_json(const RunRecord& r);
RunRecord record_from_json(const nlohmann::json& j);

// Rebuilds the trace (prompt plus segments) embedded in a record.
ReasoningTrace trace_from_record(const RunRecord& r);

// Re-extracts and re-verifies a logged trace with fresh bindings built from
// the embedded task. Optionally returns the detailed report.
bool recheck_record(const RunRecord& r, RecheckReport* out = nullptr);

// Scripted stand-in reasoner: a mock-backend script that follows the task's
// protocol along the true solution path, split into small token chunks.
// `mistakes` wrong states are spliced in; after each one the script expects
// corrective feedback (any injected text) and branches to a corrected
// continuation, while the no-intervention continuation runs on to a wrong
// final answer. A second scripted attempt reasons cleanly so retry-style
// baselines can recover. Probe tables make entropy fall and answer
// confidence rise as the reasoning progresses.
nlohmann::json synthesize_reasoner_script(const TaskInstance& task, std::uint64_t seed,
                                          int mistakes);

RunRecord run_instance(Backend& backend, const TaskInstance& task, const ExperimentConfig& cfg);

// True for stopping methods run without the feedback loop; those consume a
// clean generation, so comparisons against them should too.
bool stopping_only(const ExperimentConfig& cfg);

// Runs all instances, appending one JSON record per line to log_path.
// Instances whose id already appears in the log are skipped, so an
// interrupted experiment resumes where it stopped. Returns every record,
// previously logged ones included. Per-instance failures become error
// records; they never abort the batch.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const std::string& log_path);

std::vector<RunRecord> load_records(const std::string& log_path);
std::vector<TaskInstance> load_instances(const std::string& path);

struct Aggregate {
    int runs = 0;
    int correct = 0;
    int abstained = 0;
    long long model_tokens = 0;
    long long injected_tokens = 0;
    long long probe_tokens = 0;
    int interventions = 0;
    int sound_checked = 0;
    int sound_pass = 0;

    double accuracy() const { return runs ? static_cast<double>(correct) / runs : 0.0; }
    double soundness() const {
        return sound_checked ? static_cast<double>(sound_pass) / sound_checked : 1.0;
    }
    long long total_tokens() const { return model_tokens + injected_tokens + probe_tokens; }
};

Aggregate aggregate_records(const std::vector<RunRecord>& records);

// Model-token usage of `treatment` as a percentage of `baseline`.
double token_percent(const Aggregate& treatment, const Aggregate& baseline);

// One table row per method: the baseline first at exactly 100.00 tokens,
// then every method found in the treatment log. Throws std::invalid_argument
// naming the differing instance ids when the two logs do not cover the same
// instances.
struct ReportRow {
    std::string method;
    int n = 0;
    double accuracy_pct = 0.0;
    double tokens_pct = 0.0;
    std::optional<double> soundness_pct;
    int abstained = 0;
};

std::vector<ReportRow> make_report(const std::vector<RunRecord>& baseline,
                                   const std::vector<RunRecord>& treatment);

struct SweepPoint {
    double value = 0.0;
    Aggregate agg;
    std::string log_path;
};

// Reruns the experiment once per value of `dimension`: "k", "eat_threshold"
// or "deer_threshold" (also accepted: "threshold", "alpha"), logging into
// out_dir. The threshold dimensions force the matching method.
std::vector<SweepPoint> run_sweep(ExperimentConfig cfg, const std::string& dimension,
                                  const std::vector<double>& values, const std::string& out_dir);

std::vector<double> sweep_default_values(const std::string& dimension);

// The point spending the fewest model tokens among those whose accuracy is
// at least the baseline's. nullopt when none qualifies.
std::optional<std::size_t> select_sweep_point(const std::vector<SweepPoint>& points,
                                              double baseline_accuracy);

}  // namespace interwhen
