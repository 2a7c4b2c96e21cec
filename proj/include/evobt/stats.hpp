// stats.hpp — daily PnL aggregation, performance metrics, selection-bias null.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evobt/simulator.hpp"

namespace evobt {

struct DailyPnlSeries {
    std::vector<std::int64_t> day;  // days since epoch, UTC
    std::vector<double> pnl_adj;
    std::vector<double> pnl_net;
    std::vector<double> pnl_pos;     // frictionless stream
    std::vector<double> volume_usd;  // sum of |fill notional|

    std::size_t size() const { return day.size(); }
};

DailyPnlSeries aggregate_daily(const std::vector<LedgerRow>& ledger);

struct PerfConfig {
    double annualization_days = 365.0;
};

struct PerfMetrics {
    double sharpe = 0.0;  // mean daily pnl_adj / sd, annualized by sqrt(365)
    double sortino = 0.0;
    double calmar = 0.0;
    double max_drawdown = 0.0;  // <= 0
    double win_rate_daily = 0.0;
    double win_rate_per_trade = 0.0;
    double total_pnl_adj = 0.0;
    double total_pnl_net = 0.0;
    double total_pnl_pos = 0.0;
    double total_impact_cost = 0.0;
    double total_volume_usd = 0.0;
    double impact_bps = 0.0;
    std::size_t n_days = 0;
    std::size_t n_trades = 0;
    bool degenerate = false;  // zero dispersion or zero drawdown hit a sentinel
};

// Scale invariance: multiplying every daily PnL by k > 0 leaves sharpe,
// sortino, calmar and the win rates unchanged.
PerfMetrics perf_metrics(const DailyPnlSeries& daily, const std::vector<LedgerRow>& ledger,
                         const PerfConfig& cfg = {});

// Counterfactual PnL when the book is scaled by k: fills grow linearly,
// impact superlinearly.
double sizing_counterfactual(double base_pnl_net, double base_impact_cost, double k,
                             double impact_exponent = 1.5);

// Best-of-K selection null. sigma0 is the one-experiment dispersion; a model
// built on one window can be rescaled onto another by sqrt(days ratio).
struct NullModel {
    double pnl0 = 0.0;
    double sigma0 = 0.0;
    double window_days = 0.0;

    static NullModel from_sharpe(double pnl0, double sharpe0, double window_days);
    NullModel rescaled(double new_pnl0, double new_window_days) const;
};

// Expected maximum of K independent Gaussian picks: pnl0 + sigma0 sqrt(2 ln K).
double phacking_ceiling(const NullModel& null, std::size_t k_experiments);

double z_excess(double observed_pnl, const NullModel& null);

// Cumulative incumbent curves over an evolution run: entry i holds the best
// in-sample fitness among candidates 0..i and the out-of-sample fitness of
// that incumbent. Steps only where the incumbent changes.
struct IsOosCurve {
    std::vector<double> is_best;
    std::vector<double> oos_of_best;
    std::vector<std::size_t> champion_id;
};

IsOosCurve is_oos_curve(const std::vector<double>& is_fitness,
                        const std::vector<double>& oos_fitness);

// Ledger reconciliation: every metric input must re-derive from the ledger
// within a relative tolerance.
bool reconciles(const DailyPnlSeries& daily, const std::vector<LedgerRow>& ledger,
                double rel_tol = 1e-6);

}  // namespace evobt
