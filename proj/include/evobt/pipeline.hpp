// pipeline.hpp — wiring: data -> splits -> model -> backtests -> reports.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evobt/config.hpp"
#include "evobt/stats.hpp"
#include "evobt/strategy.hpp"
#include "json.hpp"

namespace evobt {

struct PreparedData {
    BarSeries train;
    BarSeries validation;
    BarSeries test;
    RidgeModel model;  // fitted on train; alpha_sd frozen there
    std::vector<std::string> warnings;
};

// Load or synthesize bars, split them, fit the ridge model on train.
PreparedData prepare_data(const RunConfig& cfg);

struct SplitReport {
    std::string name;
    BacktestResult result;
    DailyPnlSeries daily;
    PerfMetrics metrics;
};

// Predict alpha on the split with the trained model and run the strategy.
SplitReport run_split(const std::string& name, const BarSeries& bars, const RidgeModel& model,
                      const Genome& genome, const RunConfig& cfg);

// Validation pnl_adj as in-sample fitness, test pnl_adj recorded out-of-sample.
Evaluator make_evaluator(const PreparedData& data, const RunConfig& cfg);

nlohmann::json metrics_json(const PerfMetrics& m);
nlohmann::json backtest_report(const std::vector<SplitReport>& splits, const RunConfig& cfg);

struct AnalyzeInputs {
    std::vector<Candidate> record;
    std::optional<nlohmann::json> baseline_report;  // supplies the null model
    std::optional<nlohmann::json> evolved_report;   // supplies the sizing block
};

nlohmann::json analysis_report(const AnalyzeInputs& in);

}  // namespace evobt
