// forecaster.hpp — EMA return features, ridge alpha model, forecast scoring.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "evobt/bar.hpp"

namespace evobt {

struct FeatureMatrix {
    std::vector<std::int64_t> timestamps;
    std::vector<std::string> names;
    Eigen::MatrixXd values;  // rows align with timestamps

    std::size_t rows() const { return timestamps.size(); }
    std::size_t cols() const { return names.size(); }
};

enum class EmaMode { span, halflife };

struct CalcsetConfig {
    std::vector<double> windows = {1.0, 5.0, 10.0};
    EmaMode mode = EmaMode::span;
    bool log_returns = false;  // percent returns by default
};

// One-step close-to-close returns, first element zero.
std::vector<double> step_returns(const BarSeries& series, bool log_returns = false);

// Recursive EMA: alpha = 2/(span+1) or 1 - 2^(-1/halflife). Seeded at the
// first element; with the leading return fixed at zero the smoother starts
// from zero, and span 1 reproduces the raw returns.
std::vector<double> ema(const std::vector<double>& x, double window, EmaMode mode);

// Default feature block: EMA-smoothed returns at the configured windows.
// Row t only uses bars up to t.
FeatureMatrix default_calcset(const BarSeries& series, const CalcsetConfig& cfg = {});

// h-step-ahead returns aligned to the current row; the tail without a future
// close is zero-filled.
std::vector<double> forward_returns(const BarSeries& series, int horizon,
                                    bool log_returns = false);

struct RidgeModel {
    std::vector<std::string> feature_names;
    std::vector<int> horizons;
    int primary_horizon = 10;
    double lambda = 0.5;
    double alpha_sd = 0.0;  // sd of the primary-horizon fit on the train split
    Eigen::MatrixXd weights;  // features x horizons, no intercept

    int primary_column() const;
    std::string to_json() const;
    static RidgeModel from_json(const std::string& text);
};

struct RidgeConfig {
    double lambda = 0.5;
    std::vector<int> horizons = {1, 10, 100, 1000};
    int primary_horizon = 10;
    bool log_returns = false;
};

// Solve (X'X + lambda I) W = X'Y, one column per horizon. alpha_sd is frozen
// here from the training predictions and never recomputed downstream.
RidgeModel fit_ridge(const FeatureMatrix& x, const BarSeries& series,
                     const RidgeConfig& cfg = {});

struct AlphaSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<int> horizons;
    int primary_horizon = 10;
    double alpha_sd = 0.0;
    Eigen::MatrixXd values;  // rows x horizons

    std::vector<double> primary() const;
};

AlphaSeries predict_alpha(const RidgeModel& model, const FeatureMatrix& x);

struct ForecastScore {
    double r2 = 0.0;       // no-intercept: 1 - SSE / sum(y^2)
    double ic_mean = 0.0;  // mean daily Spearman rank correlation
    double icir = 0.0;     // ic_mean / std of daily ICs
    double combined = 0.0;
    std::size_t n_days = 0;
    bool icir_defined = true;  // false with fewer than two days
    std::vector<double> daily_ic;
};

// combined = 0.4 clamp(r2, +-1) + 0.3 clamp(ic, +-1) + 0.3 clamp(icir, +-5)/5
double combine_score(double r2, double ic_mean, double icir);

// pred and realized must align; day labels come from the timestamps.
ForecastScore score_forecast(const std::vector<double>& pred, const std::vector<double>& realized,
                             const std::vector<std::int64_t>& timestamps);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Average-rank Spearman correlation; zero when either side is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct SelectionConfig {
    std::size_t max_k = 10;
    double corr_cap = 0.85;
};

// Rank candidate columns by |Pearson correlation with the target| and accept
// greedily, skipping columns too correlated with anything already accepted.
std::vector<std::string> greedy_select(const FeatureMatrix& candidates,
                                       const std::vector<double>& target,
                                       const SelectionConfig& cfg = {});

}  // namespace evobt
