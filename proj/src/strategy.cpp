// strategy.cpp
#include "evobt/strategy.hpp"

#include <cmath>

namespace evobt {

namespace {

double clip(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

Genome StrategyParams::to_genome() const {
    return Genome{
        {"SIZING_FACTOR", sizing_factor},
        {"Q_MAX", q_max},
        {"MAX_TRADE_FRAC", max_trade_frac},
        {"MIN_TRADE_SIZE_USD", min_trade_size_usd},
        {"ALPHA_ADJUSTMENT_KNOB", alpha_adjustment_knob},
        {"RISK_REDUCTION_FACTOR", risk_reduction_factor},
        {"ZP", zp},
        {"ZP_RISKOFF", zp_riskoff},
        {"FAST_FLAT_MINUTES", fast_flat_minutes},
        {"STD", std_mult},
        {"CONTEXT_CORRECTION_FACTOR", context_correction_factor},
    };
}

StrategyParams StrategyParams::from_genome(const Genome& g) {
    StrategyParams p;
    auto take = [&](const char* key, double& slot) {
        if (auto it = g.find(key); it != g.end()) slot = it->second;
    };
    take("SIZING_FACTOR", p.sizing_factor);
    take("Q_MAX", p.q_max);
    take("MAX_TRADE_FRAC", p.max_trade_frac);
    take("MIN_TRADE_SIZE_USD", p.min_trade_size_usd);
    take("ALPHA_ADJUSTMENT_KNOB", p.alpha_adjustment_knob);
    take("RISK_REDUCTION_FACTOR", p.risk_reduction_factor);
    take("ZP", p.zp);
    take("ZP_RISKOFF", p.zp_riskoff);
    take("FAST_FLAT_MINUTES", p.fast_flat_minutes);
    take("STD", p.std_mult);
    take("CONTEXT_CORRECTION_FACTOR", p.context_correction_factor);
    return p;
}

TargetDecision set_target(const PortfolioState& state, double alpha, double alpha_sd,
                          const StrategyParams& p) {
    TargetDecision d;
    d.limit_order_depth = p.std_mult * p.zp;
    if (!std::isfinite(alpha) || !std::isfinite(alpha_sd) || alpha_sd <= 0.0) {
        d.alpha_ok = false;
        d.target_pos_btc = state.position_btc;
        return d;
    }

    const double expected_fee = std::max(kMakerFeeRate - d.limit_order_depth, kMinExpectedFee);
    const double realized_alpha = std::log(state.mid_book / state.mid);
    const double alpha_corrected = alpha - p.context_correction_factor * realized_alpha;

    double q_usd = state.position_btc * state.mid_book;
    if (!std::isfinite(q_usd)) q_usd = 0.0;
    const double k = p.sizing_factor / alpha_sd;

    const bool small_alpha = std::abs(alpha_corrected - q_usd / k) < expected_fee;
    const bool wrong_direction = sign(state.position_btc * alpha_corrected) < 0.0;
    d.risk_reduction_mode = small_alpha && wrong_direction;

    double target_usd;
    if (d.risk_reduction_mode) {
        target_usd = q_usd * p.risk_reduction_factor;
    } else if (std::abs(realized_alpha) * p.context_correction_factor > std::abs(alpha) &&
               sign(realized_alpha * alpha) > 0.0) {
        // Stale alpha already overtaken by the book move: hold.
        target_usd = q_usd;
    } else {
        const double q_long = p.sizing_factor * (alpha_corrected - expected_fee) / alpha_sd;
        const double q_short = p.sizing_factor * (alpha_corrected + expected_fee) / alpha_sd;
        if (q_long > q_usd)
            target_usd = q_long;
        else if (q_short < q_usd)
            target_usd = q_short;
        else
            target_usd = q_usd;
    }
    d.pre_correction_usd = target_usd;

    const double lag_adjustment =
        1.0 - std::min(static_cast<double>(state.data_lag_minutes), p.fast_flat_minutes) /
                  p.fast_flat_minutes;
    const double correction_factor =
        d.risk_reduction_mode
            ? lag_adjustment
            : (1.0 - std::tanh(std::abs(q_usd) / p.q_max) * p.alpha_adjustment_knob) *
                  lag_adjustment;

    target_usd = clip(target_usd * correction_factor, -p.q_max, p.q_max);
    d.target_pos_usd = target_usd;
    d.target_pos_btc = target_usd / state.mid_book;

    const double raw_trade = d.target_pos_btc - state.position_btc;
    const double max_trade_btc = p.max_trade_frac * p.q_max / state.mid_book;
    d.target_trade_qty_btc = clip(raw_trade, -max_trade_btc, max_trade_btc);

    const double delta_usd = std::abs(raw_trade) * state.mid_book;
    if (d.target_pos_btc > state.position_btc && delta_usd > p.min_trade_size_usd)
        d.side = Side::buy;
    else if (d.target_pos_btc < state.position_btc && delta_usd > p.min_trade_size_usd)
        d.side = Side::sell;
    else
        d.side = Side::none;
    return d;
}

std::optional<OrderIntent> set_limit_order(const PortfolioState& state,
                                           const TargetDecision& decision,
                                           const StrategyParams& p) {
    if (decision.side == Side::none || decision.target_trade_qty_btc == 0.0) return std::nullopt;
    const double depth =
        decision.risk_reduction_mode ? p.std_mult * p.zp_riskoff : decision.limit_order_depth;
    const double side_mult = sign(decision.target_trade_qty_btc);
    OrderIntent o;
    o.side = decision.side;
    o.qty_btc = decision.target_trade_qty_btc;
    o.limit_price = state.mid_book * std::exp(-side_mult * depth);
    return o;
}

StrategyDecision set_passive_order_data(const PortfolioState& state, double alpha,
                                        double alpha_sd, const StrategyParams& p) {
    const TargetDecision d = set_target(state, alpha, alpha_sd, p);
    StrategyDecision out;
    out.side = d.side;
    out.target_trade_qty_btc = d.target_trade_qty_btc;
    out.target_pos_btc = d.target_pos_btc;
    out.risk_reduction_mode = d.risk_reduction_mode;
    out.limit_order_depth = d.limit_order_depth;
    out.alpha_ok = d.alpha_ok;
    out.order = set_limit_order(state, d, p);
    return out;
}

StrategyFn make_strategy(const StrategyParams& p, double alpha_sd) {
    return [p, alpha_sd](const PortfolioState& state, double alpha) {
        return set_passive_order_data(state, alpha, alpha_sd, p);
    };
}

}  // namespace evobt
