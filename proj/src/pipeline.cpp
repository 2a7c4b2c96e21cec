// pipeline.cpp
#include "evobt/pipeline.hpp"

#include <cmath>
#include <limits>

namespace evobt {

PreparedData prepare_data(const RunConfig& cfg) {
    BarSeries all = cfg.data.csv_path.empty() ? synthesize(cfg.data.synth)
                                              : load_csv(cfg.data.csv_path, cfg.data.csv_schema);
    SplitResult s = split(all, cfg.splits);
    PreparedData out;
    out.train = std::move(s.train);
    out.validation = std::move(s.validation);
    out.test = std::move(s.test);
    out.warnings = std::move(s.warnings);
    if (out.train.empty()) throw std::runtime_error("prepare_data: train split is empty");

    const FeatureMatrix x = default_calcset(out.train, cfg.calcset);
    out.model = fit_ridge(x, out.train, cfg.forecaster);
    return out;
}

SplitReport run_split(const std::string& name, const BarSeries& bars, const RidgeModel& model,
                      const Genome& genome, const RunConfig& cfg) {
    if (bars.size() < 2) throw std::runtime_error("run_split: split '" + name + "' too small");
    SplitReport rep;
    rep.name = name;

    const FeatureMatrix x = default_calcset(bars, cfg.calcset);
    const AlphaSeries alpha = predict_alpha(model, x);

    const StrategyParams params = StrategyParams::from_genome(genome);
    rep.result = run_backtest(bars, alpha.primary(), make_strategy(params, alpha.alpha_sd),
                              cfg.sim, cfg.impact);
    rep.daily = aggregate_daily(rep.result.ledger);
    rep.metrics = perf_metrics(rep.daily, rep.result.ledger);
    return rep;
}

Evaluator make_evaluator(const PreparedData& data, const RunConfig& cfg) {
    // The prepared splits outlive the evaluator in every call path; capture by
    // reference so parallel evaluations share one copy.
    const BarSeries& val = data.validation;
    const BarSeries& test = data.test;
    const RidgeModel& model = data.model;
    return [&val, &test, &model, cfg](const Genome& genome) -> EvalResult {
        Genome merged = StrategyParams().to_genome();
        for (const auto& [k, v] : genome) merged[k] = v;
        EvalResult r;
        const SplitReport v_rep = run_split("validation", val, model, merged, cfg);
        r.fitness = v_rep.metrics.total_pnl_adj;
        if (test.size() >= 2) {
            const SplitReport t_rep = run_split("test", test, model, merged, cfg);
            r.oos_fitness = t_rep.metrics.total_pnl_adj;
        }
        return r;
    };
}

nlohmann::json metrics_json(const PerfMetrics& m) {
    auto num = [](double x) -> nlohmann::json {
        if (std::isfinite(x)) return x;
        return x > 0 ? "inf" : "-inf";
    };
    return {{"sharpe", num(m.sharpe)},
            {"sortino", num(m.sortino)},
            {"calmar", num(m.calmar)},
            {"max_drawdown", m.max_drawdown},
            {"win_rate_daily", m.win_rate_daily},
            {"win_rate_per_trade", m.win_rate_per_trade},
            {"total_pnl_adj", m.total_pnl_adj},
            {"total_pnl_net", m.total_pnl_net},
            {"total_pnl_pos", m.total_pnl_pos},
            {"total_impact_cost", m.total_impact_cost},
            {"total_volume_usd", m.total_volume_usd},
            {"impact_bps", m.impact_bps},
            {"n_days", m.n_days},
            {"n_trades", m.n_trades},
            {"degenerate", m.degenerate}};
}

nlohmann::json backtest_report(const std::vector<SplitReport>& splits, const RunConfig& cfg) {
    nlohmann::json j;
    j["schema"] = "backtest_report";
    j["schema_version"] = 1;
    j["config"] = cfg.to_json();
    j["splits"] = nlohmann::json::object();
    for (const SplitReport& s : splits) {
        nlohmann::json sec = metrics_json(s.metrics);
        sec["orders"] = s.result.order_count;
        sec["fills"] = s.result.fill_count;
        sec["impact_cost_bps"] = s.result.impact.cost_bps;
        j["splits"][s.name] = sec;
    }
    return j;
}

nlohmann::json analysis_report(const AnalyzeInputs& in) {
    nlohmann::json j;
    j["schema"] = "analysis_report";
    j["schema_version"] = 1;

    std::vector<double> is_fit, oos_fit;
    for (const Candidate& c : in.record) {
        is_fit.push_back(c.fitness.value_or(-std::numeric_limits<double>::infinity()));
        oos_fit.push_back(c.oos_fitness.value_or(0.0));
    }
    const IsOosCurve curve = is_oos_curve(is_fit, oos_fit);
    j["candidates"] = in.record.size();
    j["is_curve"] = curve.is_best;
    j["oos_curve"] = curve.oos_of_best;
    if (!curve.is_best.empty()) {
        j["final_is"] = curve.is_best.back();
        j["final_oos"] = curve.oos_of_best.back();
        j["degradation_ratio"] =
            curve.is_best.back() != 0.0 ? curve.oos_of_best.back() / curve.is_best.back() : 0.0;
    }

    j["mutators"] = nlohmann::json::array();
    for (const MutatorStats& s : mutator_stats(in.record))
        j["mutators"].push_back({{"tag", s.tag},
                                 {"proposed", s.proposed},
                                 {"improved", s.improved},
                                 {"improvement_rate", s.improvement_rate},
                                 {"top20", s.top20},
                                 {"lineage_steps", s.lineage_steps}});

    if (in.baseline_report) {
        const auto& base = (*in.baseline_report)["splits"];
        if (base.contains("validation") && !curve.is_best.empty()) {
            const auto& v = base["validation"];
            const double pnl0 = v["total_pnl_adj"].get<double>();
            const double s0 = v["sharpe"].is_number() ? v["sharpe"].get<double>() : 0.0;
            const double window = v["n_days"].get<double>();
            if (s0 > 0.0 && pnl0 > 0.0) {
                const NullModel null = NullModel::from_sharpe(pnl0, s0, window);
                const std::size_t k_trials = in.record.size();
                nlohmann::json nb{{"pnl0", null.pnl0},
                                  {"s0", s0},
                                  {"sigma0", null.sigma0},
                                  {"window_days", null.window_days},
                                  {"k", k_trials},
                                  {"ceiling", phacking_ceiling(null, k_trials)},
                                  {"z_val", z_excess(curve.is_best.back(), null)}};
                if (base.contains("test")) {
                    const auto& t = base["test"];
                    const NullModel tn = null.rescaled(t["total_pnl_adj"].get<double>(),
                                                       t["n_days"].get<double>());
                    nb["z_test"] = z_excess(curve.oos_of_best.back(), tn);
                    nb["ceiling_test"] = phacking_ceiling(tn, k_trials);
                }
                j["null_model"] = nb;
            }
        }
    }

    if (in.baseline_report && in.evolved_report) {
        const auto& b = (*in.baseline_report)["splits"];
        const auto& e = (*in.evolved_report)["splits"];
        if (b.contains("validation") && e.contains("validation")) {
            const double f_b = b["validation"]["total_pnl_net"].get<double>();
            const double i_b = b["validation"]["total_impact_cost"].get<double>();
            const double vol_b = b["validation"]["total_volume_usd"].get<double>();
            const double vol_e = e["validation"]["total_volume_usd"].get<double>();
            const double pnl_e = e["validation"]["total_pnl_adj"].get<double>();
            const double k = vol_b > 0.0 ? vol_e / vol_b : 0.0;
            const double counterfactual = sizing_counterfactual(f_b, i_b, k);
            j["sizing"] = {{"f_b", f_b},
                           {"i_b", i_b},
                           {"k", k},
                           {"counterfactual", counterfactual},
                           {"evolved_pnl_adj", pnl_e},
                           {"ratio", counterfactual != 0.0 ? pnl_e / counterfactual : 0.0}};
        }
    }
    return j;
}

}  // namespace evobt
