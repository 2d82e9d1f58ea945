#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "interwhen/harness.hpp"

namespace {

using interwhen::Aggregate;
using interwhen::ExperimentConfig;
using interwhen::RunRecord;
using nlohmann::json;

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

void print_aggregate(const Aggregate& agg) {
    std::cout << std::fixed << std::setprecision(2);
    std::cout << "runs          " << agg.runs << "\n"
              << "accuracy      " << 100.0 * agg.accuracy() << "%\n"
              << "abstained     " << agg.abstained << "\n"
              << "model tokens  " << agg.model_tokens << "\n"
              << "injected      " << agg.injected_tokens << "\n"
              << "probe tokens  " << agg.probe_tokens << "\n"
              << "interventions " << agg.interventions << "\n";
    if (agg.sound_checked > 0)
        std::cout << "soundness     " << 100.0 * agg.soundness() << "% of " << agg.sound_checked
                  << " checked\n";
}

int cmd_gen(const std::string& kind, int n, std::uint64_t seed, const std::string& out_path) {
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "cannot open " << out_path << " for writing\n";
        return 1;
    }
    for (int i = 0; i < n; ++i) {
        auto task = interwhen::generate_task(kind, seed + static_cast<std::uint64_t>(i));
        out << interwhen::task_to_json(task).dump() << "\n";
    }
    std::cout << "wrote " << n << " " << kind << " instances to " << out_path << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, int instances, std::string log_path) {
    ExperimentConfig cfg = interwhen::load_config(config_path);
    if (instances > 0) cfg.instances = instances;
    if (log_path.empty()) log_path = cfg.name + ".jsonl";
    auto records = interwhen::run_experiment(cfg, log_path);
    std::cout << "method " << cfg.method << ", log " << log_path << "\n";
    print_aggregate(interwhen::aggregate_records(records));
    return 0;
}

int cmd_verify(const std::string& kind, const std::string& trace_path) {
    std::ifstream in(trace_path);
    if (!in) {
        std::cerr << "cannot open " << trace_path << "\n";
        return 1;
    }
    json j = json::parse(in);
    RunRecord rec;
    if (j.contains("segments")) {
        rec = interwhen::record_from_json(j);
    } else if (j.contains("task") && j.contains("text")) {
        rec.task = j["task"];
        rec.segments = json::array({{{"origin", "model"}, {"text", j["text"]}}});
    } else {
        std::cerr << "trace file must be a run record or {\"task\":..., \"text\":...}\n";
        return 1;
    }
    if (!kind.empty() && rec.task.value("kind", "") != kind) {
        std::cerr << "kind mismatch: file has " << rec.task.value("kind", "?") << "\n";
        return 1;
    }
    interwhen::RecheckReport rep;
    bool ok = interwhen::recheck_record(rec, &rep);
    std::cout << "checked " << rep.checked << " states, " << rep.failures.size()
              << " failed\n";
    for (const auto& f : rep.failures)
        std::cout << "  [" << f.binding_id << "] bytes " << f.state.span.begin << ".."
                  << f.state.span.end << ": " << f.verdict.feedback.value_or("(no feedback)")
                  << "\n";
    std::cout << (ok ? "SOUND" : "UNSOUND") << "\n";
    return ok ? 0 : 1;
}

int cmd_report(const std::string& log_path, const std::string& baseline_path) {
    auto baseline = interwhen::load_records(baseline_path);
    auto treatment = interwhen::load_records(log_path);
    auto rows = interwhen::make_report(baseline, treatment);
    std::cout << std::left << std::setw(16) << "method" << std::right << std::setw(6) << "n"
              << std::setw(12) << "accuracy%" << std::setw(10) << "tokens%" << std::setw(12)
              << "soundness%" << std::setw(11) << "abstained" << "\n";
    std::cout << std::fixed << std::setprecision(2);
    for (const auto& row : rows) {
        std::cout << std::left << std::setw(16) << row.method << std::right << std::setw(6)
                  << row.n << std::setw(12) << row.accuracy_pct << std::setw(10)
                  << row.tokens_pct;
        if (row.soundness_pct)
            std::cout << std::setw(12) << *row.soundness_pct;
        else
            std::cout << std::setw(12) << "-";
        std::cout << std::setw(11) << row.abstained << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& dimension,
              const std::string& values_csv, const std::string& out_dir) {
    ExperimentConfig cfg = interwhen::load_config(config_path);
    std::vector<double> values =
        values_csv.empty() ? interwhen::sweep_default_values(dimension) : parse_values(values_csv);

    ExperimentConfig swept = cfg;
    if (dimension == "eat_threshold") swept.method = "eat";
    if (dimension == "deer_threshold") swept.method = "deer";
    ExperimentConfig base_cfg = cfg;
    base_cfg.method = "single";
    if (interwhen::stopping_only(swept)) base_cfg.synthetic_mistakes = 0;
    std::filesystem::create_directories(out_dir);
    std::string base_log = out_dir + "/" + cfg.name + "-baseline.jsonl";
    Aggregate base = interwhen::aggregate_records(interwhen::run_experiment(base_cfg, base_log));

    auto points = interwhen::run_sweep(cfg, dimension, values, out_dir);

    std::cout << std::fixed << std::setprecision(2);
    std::cout << std::right << std::setw(12) << "value" << std::setw(12) << "accuracy%"
              << std::setw(14) << "model_tokens" << std::setw(10) << "tokens%" << std::setw(8)
              << "%red" << "\n";
    std::cout << std::setw(12) << "baseline" << std::setw(12) << 100.0 * base.accuracy()
              << std::setw(14) << base.model_tokens << std::setw(10) << 100.0 << std::setw(8)
              << 0.0 << "\n";
    for (const auto& p : points) {
        double pct = interwhen::token_percent(p.agg, base);
        std::cout << std::setw(12) << short_num(p.value) << std::setw(12)
                  << 100.0 * p.agg.accuracy() << std::setw(14) << p.agg.model_tokens
                  << std::setw(10) << pct << std::setw(8) << 100.0 - pct << "\n";
    }

    auto sel = interwhen::select_sweep_point(points, base.accuracy());
    if (!sel) {
        std::cout << "selection: none maintains baseline accuracy; keep the baseline\n";
        return 0;
    }
    int ties = 0;
    for (const auto& p : points)
        if (p.agg.accuracy() + 1e-9 >= base.accuracy() &&
            p.agg.model_tokens == points[*sel].agg.model_tokens)
            ++ties;
    std::cout << "selection: " << dimension << " = " << short_num(points[*sel].value);
    if (ties > 1) std::cout << " (tie among " << ties << " values, first taken)";
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verified-state monitoring experiments"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "generate task instances to a JSONL file");
    std::string gen_kind = "game24", gen_out = "instances.jsonl";
    int gen_n = 10;
    std::uint64_t gen_seed = 1;
    gen->add_option("--kind", gen_kind, "maze | spatial | game24")->required();
    gen->add_option("--n", gen_n, "instance count");
    gen->add_option("--seed", gen_seed, "base seed; instance i uses seed+i");
    gen->add_option("--out", gen_out, "output JSONL path")->required();

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    std::string run_config, run_log;
    int run_instances = 0;
    run->add_option("--config", run_config, "experiment config JSON")->required();
    run->add_option("--instances", run_instances, "override the config's instance count");
    run->add_option("--log", run_log, "JSONL log path (default <name>.jsonl)");

    auto* verify = app.add_subcommand("verify", "re-verify a logged trace from scratch");
    std::string verify_kind, verify_file;
    verify->add_option("--kind", verify_kind, "expected task kind (optional check)");
    verify->add_option("--trace-file", verify_file,
                       "run-record JSON or {\"task\":..., \"text\":...}")
        ->required();

    auto* report = app.add_subcommand("report", "accuracy/token table against a baseline log");
    std::string report_log, report_baseline;
    report->add_option("--log", report_log, "treatment JSONL log")->required();
    report->add_option("--baseline-log", report_baseline, "baseline JSONL log")->required();

    auto* sweep = app.add_subcommand("sweep", "sweep a stopping parameter");
    std::string sweep_config, sweep_dim, sweep_values, sweep_dir = "sweep";
    sweep->add_option("--config", sweep_config, "experiment config JSON")->required();
    sweep->add_option("--dimension", sweep_dim, "k | eat_threshold | deer_threshold | alpha")
        ->required();
    sweep->add_option("--values", sweep_values, "comma-separated values (default per dimension)");
    sweep->add_option("--out-dir", sweep_dir, "directory for per-value logs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_kind, gen_n, gen_seed, gen_out);
        if (run->parsed()) return cmd_run(run_config, run_instances, run_log);
        if (verify->parsed()) return cmd_verify(verify_kind, verify_file);
        if (report->parsed()) return cmd_report(report_log, report_baseline);
        if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_dim, sweep_values, sweep_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
