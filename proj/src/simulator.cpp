// simulator.cpp
#include "evobt/simulator.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace evobt {

std::string side_name(Side s) {
    switch (s) {
        case Side::buy: return "buy";
        case Side::sell: return "sell";
        default: return "none";
    }
}

void SimConfig::validate() const {
    if (hit_ratio < 0.0 || hit_ratio > 1.0)
        throw std::runtime_error("sim: hit_ratio must lie in [0, 1]");
    if (fee_rate < 0.0) throw std::runtime_error("sim: negative fee_rate");
    if (max_limit_order_usd <= 0.0)
        throw std::runtime_error("sim: max_limit_order_usd must be positive");
    if (data_lag_minutes < 0) throw std::runtime_error("sim: negative data lag");
}

std::optional<Fill> check_fill(const OrderIntent& order, const Bar& bar, double hit_ratio) {
    if (order.side == Side::none || order.qty_btc == 0.0) return std::nullopt;
    const bool hit = order.side == Side::buy ? bar.low < order.limit_price
                                             : bar.high > order.limit_price;
    if (!hit) return std::nullopt;
    Fill f;
    f.ts_min = bar.ts_min;
    f.qty_btc = order.qty_btc * hit_ratio;
    f.price = order.limit_price;
    if (f.qty_btc == 0.0) return std::nullopt;
    return f;
}

OrderIntent constrain_order(const OrderIntent& order, double mid_book, const SimConfig& cfg) {
    OrderIntent out = order;
    if (out.side == Side::none) {
        out.qty_btc = 0.0;
        return out;
    }
    const double want = out.side == Side::buy ? 1.0 : -1.0;
    if (out.qty_btc * want < 0.0) out.qty_btc = -out.qty_btc;
    const double max_btc = cfg.max_limit_order_usd / mid_book;
    if (std::abs(out.qty_btc) > max_btc) out.qty_btc = want * max_btc;
    return out;
}

BacktestResult run_backtest(const BarSeries& series, const std::vector<double>& alpha,
                            const StrategyFn& strategy, const SimConfig& cfg,
                            const ImpactParams& impact_params) {
    cfg.validate();
    impact_params.validate();
    if (alpha.size() != series.size())
        throw std::runtime_error("run_backtest: alpha length does not match series");
    if (series.size() < 2) throw std::runtime_error("run_backtest: need at least two bars");

    BacktestResult res;
    res.ledger.reserve(series.size() - 1);

    const int lag = cfg.data_lag_minutes;
    double position = 0.0;
    std::optional<OrderIntent> resting;

    for (std::size_t t = 0; t + 1 < series.size(); ++t) {
        const Bar& bar = series[t];
        const Bar& next = series[t + 1];
        const double mid = bar.close;

        LedgerRow row;
        row.ts_min = bar.ts_min;
        row.mid = mid;
        row.mid_move = next.close - mid;

        double filled_qty = 0.0;
        double fill_price = 0.0;
        if (resting) {
            if (auto f = check_fill(*resting, bar, cfg.hit_ratio)) {
                filled_qty = f->qty_btc;
                fill_price = f->price;
                position += filled_qty;
                row.fill = *f;
                res.trades.push_back(
                    {bar.ts_min * 60, filled_qty * fill_price});
                ++res.fill_count;
            }
            resting.reset();  // anything unfilled is cancelled
        }

        const std::size_t book_idx = t >= static_cast<std::size_t>(lag) ? t - lag : 0;
        PortfolioState state;
        state.position_btc = position;
        state.mid = mid;
        state.mid_book = series[book_idx].close;
        state.data_lag_minutes = lag;

        StrategyDecision decision;
        try {
            decision = strategy(state, alpha[book_idx]);
        } catch (const std::exception& e) {
            throw std::runtime_error("strategy raised at ts_min " + std::to_string(bar.ts_min) +
                                     ": " + e.what());
        }

        if (decision.order && decision.order->side != Side::none) {
            OrderIntent constrained = constrain_order(*decision.order, state.mid_book, cfg);
            if (constrained.qty_btc != 0.0) {
                resting = constrained;
                ++res.order_count;
            }
        }

        row.position_btc = position;
        row.target_position_btc = decision.target_pos_btc;
        row.pnl_pos = position * row.mid_move;
        row.pnl_target = decision.target_pos_btc * row.mid_move;
        row.pnl_net = row.pnl_pos - (fill_price - mid) * filled_qty -
                      cfg.fee_rate * mid * std::abs(filled_qty);
        res.ledger.push_back(row);
    }

    res.impact = charge(res.trades, impact_params);

    // Fold per-interval impact into pnl_adj. Trade timestamps are bar times
    // in seconds, so the lookup is exact.
    for (LedgerRow& row : res.ledger) {
        auto it = res.impact.per_interval.find(row.ts_min * 60);
        row.impact_cost = it != res.impact.per_interval.end() ? it->second : 0.0;
        row.pnl_adj = row.pnl_net - row.impact_cost;
    }
    return res;
}

void write_ledger_csv(const std::vector<LedgerRow>& ledger, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ledger: " + path);
    out.precision(17);
    out << "timestamp,position_btc,target_position_btc,mid,mid_move,pnl_pos,pnl_target,"
           "pnl_net,impact_cost,pnl_adj,fill_qty_btc,fill_price\n";
    for (const LedgerRow& r : ledger) {
        out << r.ts_min * 60 << ',' << r.position_btc << ',' << r.target_position_btc << ','
            << r.mid << ',' << r.mid_move << ',' << r.pnl_pos << ',' << r.pnl_target << ','
            << r.pnl_net << ',' << r.impact_cost << ',' << r.pnl_adj << ',';
        if (r.fill)
            out << r.fill->qty_btc << ',' << r.fill->price;
        else
            out << ',';
        out << '\n';
    }
}

void write_ledger_jsonl(const std::vector<LedgerRow>& ledger, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ledger: " + path);
    for (const LedgerRow& r : ledger) {
        nlohmann::json j{{"timestamp", r.ts_min * 60},
                         {"position_btc", r.position_btc},
                         {"target_position_btc", r.target_position_btc},
                         {"mid", r.mid},
                         {"mid_move", r.mid_move},
                         {"pnl_pos", r.pnl_pos},
                         {"pnl_target", r.pnl_target},
                         {"pnl_net", r.pnl_net},
                         {"impact_cost", r.impact_cost},
                         {"pnl_adj", r.pnl_adj}};
        if (r.fill)
            j["fill"] = {{"qty_btc", r.fill->qty_btc}, {"price", r.fill->price}};
        else
            j["fill"] = nullptr;
        out << j.dump() << '\n';
    }
}

}  // namespace evobt
