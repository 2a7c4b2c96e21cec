// evobt_main.cpp — command-line front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "evobt/pipeline.hpp"
#include "evobt/schema.hpp"

namespace fs = std::filesystem;
using namespace evobt;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string splits = "validation,test";
    long long seed = -1;
    unsigned jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "random seed");
    cmd->add_option("--jobs", args.jobs, "parallel evaluation slots");
}

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = load_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed >= 0) {
        cfg.data.synth.seed = static_cast<std::uint64_t>(args.seed);
        cfg.calibration.seed = static_cast<std::uint64_t>(args.seed);
        cfg.evolution.seed = static_cast<std::uint64_t>(args.seed);
    }
    cfg.evolution.jobs = args.jobs;
    return cfg;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<std::string> parse_split_list(const std::string& list) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const auto comma = list.find(',', pos);
        const std::string name =
            list.substr(pos, comma == std::string::npos ? list.size() - pos : comma - pos);
        if (name == "train" || name == "validation" || name == "test")
            out.push_back(name);
        else if (!name.empty())
            throw CLI::ValidationError("--splits", "unknown split '" + name + "'");
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw CLI::ValidationError("--splits", "no splits requested");
    return out;
}

Genome merged_genome(const RunConfig& cfg) {
    Genome g = StrategyParams().to_genome();
    for (const auto& [k, v] : cfg.strategy) g[k] = v;
    return g;
}

int cmd_backtest(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    const auto wanted = parse_split_list(args.splits);
    const PreparedData data = prepare_data(cfg);
    for (const auto& w : data.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    fs::create_directories(cfg.out_dir);
    std::vector<SplitReport> reports;
    const Genome genome = merged_genome(cfg);
    for (const auto& name : wanted) {
        const BarSeries& bars = name == "train" ? data.train
                                : name == "validation" ? data.validation
                                                       : data.test;
        SplitReport rep = run_split(name, bars, data.model, genome, cfg);
        write_ledger_csv(rep.result.ledger, fs::path(cfg.out_dir) / (name + "_ledger.csv"));
        write_ledger_jsonl(rep.result.ledger, fs::path(cfg.out_dir) / (name + "_ledger.jsonl"));
        reports.push_back(std::move(rep));
    }

    write_json(backtest_report(reports, cfg), fs::path(cfg.out_dir) / "backtest_report.json");
    {
        std::ofstream mout(fs::path(cfg.out_dir) / "model.json");
        mout << data.model.to_json() << '\n';
    }

    std::printf("%-12s %10s %14s %16s %9s %9s\n", "split", "sharpe", "pnl_adj", "volume_usd",
                "win_rate", "days");
    for (const SplitReport& r : reports)
        std::printf("%-12s %10.2f %14.2f %16.0f %9.3f %9zu\n", r.name.c_str(), r.metrics.sharpe,
                    r.metrics.total_pnl_adj, r.metrics.total_volume_usd, r.metrics.win_rate_daily,
                    r.metrics.n_days);
    return 0;
}

int cmd_calibrate(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    const PreparedData data = prepare_data(cfg);
    const Evaluator eval = make_evaluator(data, cfg);

    const Objective objective = [&](const Genome& g) {
        const EvalResult r = eval(g);
        if (!r.fitness) throw std::runtime_error("evaluation failed");
        return *r.fitness;
    };
    const CalibrationResult res = calibrate(cfg.space, objective, cfg.calibration);

    fs::create_directories(cfg.out_dir);
    write_trials_jsonl(res.trials, (fs::path(cfg.out_dir) / "trials.jsonl").string());
    write_json(nlohmann::json(res.best_genome), fs::path(cfg.out_dir) / "best_genome.json");
    write_json(nlohmann::json{{"schema", "convergence"},
                              {"schema_version", 1},
                              {"best_objective", res.best_objective},
                              {"running_best", res.convergence}},
               fs::path(cfg.out_dir) / "convergence.json");
    std::printf("best objective %.2f after %zu trials\n", res.best_objective, res.trials.size());
    return 0;
}

int cmd_evolve(const CommonArgs& args, long long generations_override) {
    RunConfig cfg = resolve_config(args);
    if (generations_override >= 0)
        cfg.evolution.generations = static_cast<std::size_t>(generations_override);
    const PreparedData data = prepare_data(cfg);
    const Evaluator eval = make_evaluator(data, cfg);

    const EvolutionRun run = evolve(merged_genome(cfg), cfg.space, eval, cfg.evolution);

    fs::create_directories(cfg.out_dir);
    write_run_record(run.candidates, (fs::path(cfg.out_dir) / "run_record.jsonl").string());
    nlohmann::json curves{{"schema", "evolution_curves"},
                          {"schema_version", 1},
                          {"is_curve", run.is_curve},
                          {"oos_curve", run.oos_curve},
                          {"migrations", run.migrations}};
    if (run.best_id) curves["best_id"] = *run.best_id;
    write_json(curves, fs::path(cfg.out_dir) / "curves.json");

    const double base = run.candidates.front().fitness.value_or(0.0);
    std::printf("candidates %zu, baseline %.2f, best %.2f\n", run.candidates.size(), base,
                run.is_curve.empty() ? 0.0 : run.is_curve.back());
    return 0;
}

int cmd_select_features(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    const PreparedData data = prepare_data(cfg);

    CalcsetConfig lib = cfg.calcset;
    lib.windows = cfg.candidate_windows;
    const FeatureMatrix candidates = default_calcset(data.train, lib);
    const auto target = forward_returns(data.train, cfg.forecaster.primary_horizon,
                                        cfg.forecaster.log_returns);
    const auto picked = greedy_select(candidates, target, cfg.selection);

    fs::create_directories(cfg.out_dir);
    write_json(nlohmann::json{{"schema", "selected_features"},
                              {"schema_version", 1},
                              {"selected", picked}},
               fs::path(cfg.out_dir) / "selected_features.json");
    for (const auto& name : picked) std::printf("%s\n", name.c_str());
    return 0;
}

int cmd_analyze(const CommonArgs& args, const std::string& record_path,
                const std::string& baseline_path, const std::string& evolved_path) {
    const RunConfig cfg = resolve_config(args);
    AnalyzeInputs in;
    in.record = read_run_record(record_path);
    if (!baseline_path.empty()) in.baseline_report = load_json_file(baseline_path);
    if (!evolved_path.empty()) in.evolved_report = load_json_file(evolved_path);

    const nlohmann::json report = analysis_report(in);
    fs::create_directories(cfg.out_dir);
    write_json(report, fs::path(cfg.out_dir) / "analysis_report.json");
    std::printf("analyzed %zu candidates\n", in.record.size());
    return 0;
}

int cmd_synth_data(const CommonArgs& args, const std::string& out_csv) {
    const RunConfig cfg = resolve_config(args);
    const BarSeries series = synthesize(cfg.data.synth);
    write_csv(series, out_csv);
    std::printf("wrote %zu bars to %s\n", series.size(), out_csv.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"minute-bar backtesting and strategy-evolution workbench"};
    app.require_subcommand(1);

    CommonArgs args;
    long long generations_override = -1;
    std::string record_path, baseline_path, evolved_path, out_csv = "synth.csv";

    auto* backtest = app.add_subcommand("backtest", "run the strategy over data splits");
    add_common(backtest, args);
    backtest->add_option("--splits", args.splits, "comma list of train,validation,test");

    auto* calibrate_cmd = app.add_subcommand("calibrate", "random + TPE search over the genome");
    add_common(calibrate_cmd, args);

    auto* evolve_cmd = app.add_subcommand("evolve", "island/MAP-Elites evolution run");
    add_common(evolve_cmd, args);
    evolve_cmd->add_option("--generations", generations_override, "override generation count");

    auto* select = app.add_subcommand("select-features", "greedy correlation-filtered selection");
    add_common(select, args);

    auto* analyze = app.add_subcommand("analyze", "stats report from a run record");
    add_common(analyze, args);
    analyze->add_option("record", record_path, "run record JSONL")->required();
    analyze->add_option("--baseline-report", baseline_path, "baseline backtest report JSON");
    analyze->add_option("--evolved-report", evolved_path, "evolved backtest report JSON");

    auto* synth = app.add_subcommand("synth-data", "write a synthetic minute-bar CSV");
    add_common(synth, args);
    synth->add_option("--out-csv", out_csv, "destination CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (backtest->parsed()) return cmd_backtest(args);
        if (calibrate_cmd->parsed()) return cmd_calibrate(args);
        if (evolve_cmd->parsed()) return cmd_evolve(args, generations_override);
        if (select->parsed()) return cmd_select_features(args);
        if (analyze->parsed()) return cmd_analyze(args, record_path, baseline_path, evolved_path);
        if (synth->parsed()) return cmd_synth_data(args, out_csv);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        const std::string msg = e.what();
        // Configuration and input-file problems are usage errors.
        if (msg.find("cannot open") != std::string::npos ||
            msg.find("config") != std::string::npos || msg.find("missing column") != std::string::npos)
            return 2;
        return 1;
    }
    return 2;
}
