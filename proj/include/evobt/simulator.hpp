// simulator.hpp — passive limit-order backtester over minute bars.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evobt/bar.hpp"
#include "evobt/impact.hpp"

namespace evobt {

enum class Side { none, buy, sell };

std::string side_name(Side s);

struct OrderIntent {
    Side side = Side::none;
    double limit_price = 0.0;
    double qty_btc = 0.0;  // signed: positive buys, negative sells
};

struct Fill {
    std::int64_t ts_min = 0;
    double qty_btc = 0.0;  // signed
    double price = 0.0;    // the limit price
};

// What the strategy is allowed to see at a decision point.
struct PortfolioState {
    double position_btc = 0.0;
    double mid = 0.0;       // close of the current bar
    double mid_book = 0.0;  // close as of data_lag_minutes ago
    int data_lag_minutes = 0;
};

struct LedgerRow {
    std::int64_t ts_min = 0;
    double position_btc = 0.0;  // q_{t+1}, after any fill this interval
    double target_position_btc = 0.0;
    double mid = 0.0;
    double mid_move = 0.0;  // close(t+1) - close(t)
    double pnl_pos = 0.0;
    double pnl_target = 0.0;
    double pnl_net = 0.0;
    double impact_cost = 0.0;
    double pnl_adj = 0.0;  // pnl_net - impact_cost, by construction
    std::optional<Fill> fill;
};

struct SimConfig {
    double hit_ratio = 1.0;  // in [0, 1]
    double fee_rate = 0.00015;
    double max_limit_order_usd = 100000.0;
    int data_lag_minutes = 0;

    void validate() const;
};

// Strategy callback: full state plus the current alpha forecast. Returns the
// order to submit (side none means no order) along with decision metadata
// that the ledger records.
struct StrategyDecision {
    Side side = Side::none;
    double target_trade_qty_btc = 0.0;
    double target_pos_btc = 0.0;
    bool risk_reduction_mode = false;
    double limit_order_depth = 0.0;
    bool alpha_ok = true;
    std::optional<OrderIntent> order;
};

using StrategyFn = std::function<StrategyDecision(const PortfolioState&, double alpha)>;

// Buys fill when the bar trades strictly below the limit, sells strictly
// above. Fill quantity is qty * hit_ratio at the limit price.
std::optional<Fill> check_fill(const OrderIntent& order, const Bar& bar, double hit_ratio);

// Force the quantity sign to match the side and clip the notional at
// mid_book to max_limit_order_usd.
OrderIntent constrain_order(const OrderIntent& order, double mid_book, const SimConfig& cfg);

struct BacktestResult {
    std::vector<LedgerRow> ledger;
    TradeLog trades;            // fills as signed USD notionals
    ImpactReport impact;
    std::size_t order_count = 0;
    std::size_t fill_count = 0;
};

// Drive the strategy over the series. Per interval t (all but the last bar):
// resting order from t-1 is checked against bar t, position updates, the
// order is cancelled, the strategy is queried and its constrained order rests
// for t+1. PnL marks against close(t+1) - close(t); impact costs are computed
// over the full trade log afterwards and folded into pnl_adj.
// alpha[i] must align with series.bars[i]; the strategy sees the lagged value.
BacktestResult run_backtest(const BarSeries& series, const std::vector<double>& alpha,
                            const StrategyFn& strategy, const SimConfig& cfg,
                            const ImpactParams& impact_params);

void write_ledger_csv(const std::vector<LedgerRow>& ledger, const std::string& path);
void write_ledger_jsonl(const std::vector<LedgerRow>& ledger, const std::string& path);

}  // namespace evobt
