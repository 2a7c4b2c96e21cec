// strategy.hpp — passive executor: alpha-proportional targets, limit placement.
#pragma once

#include <optional>

#include "evobt/params.hpp"
#include "evobt/simulator.hpp"

namespace evobt {

// Exchange fee schedule the sizing rule prices in. Fixed economics, not part
// of the genome.
inline constexpr double kMakerFeeRate = 0.015 / 100.0;
inline constexpr double kMinExpectedFee = 0.005 / 100.0;

struct StrategyParams {
    double sizing_factor = 10000.0;
    double q_max = 200000.0;  // USD position cap, fixed
    double max_trade_frac = 0.2;
    double min_trade_size_usd = 0.0;
    double alpha_adjustment_knob = 0.5;
    double risk_reduction_factor = 0.6;
    double zp = 1e-4;
    double zp_riskoff = 3e-5;
    double fast_flat_minutes = 10.0;
    double std_mult = 1.0;
    double context_correction_factor = 0.0;

    Genome to_genome() const;
    static StrategyParams from_genome(const Genome& g);  // unknown keys ignored
};

struct TargetDecision {
    Side side = Side::none;
    double target_trade_qty_btc = 0.0;
    double target_pos_btc = 0.0;
    double target_pos_usd = 0.0;      // after correction and clipping
    double pre_correction_usd = 0.0;  // sizing-rule output before correction
    bool risk_reduction_mode = false;
    double limit_order_depth = 0.0;
    bool alpha_ok = true;
};

// Position sizing. Risk-reduction mode shrinks toward a fraction of the
// current book when the corrected alpha is small and against the position;
// otherwise the target is alpha over alpha_sd scaled by sizing_factor with
// the expected fee netted out, dead-banded around the current position.
TargetDecision set_target(const PortfolioState& state, double alpha, double alpha_sd,
                          const StrategyParams& p);

// Place a passive order one depth away from mid_book on the favorable side.
// Risk-reduction mode uses the tighter riskoff depth.
std::optional<OrderIntent> set_limit_order(const PortfolioState& state,
                                           const TargetDecision& decision,
                                           const StrategyParams& p);

// The composition the simulator (and the evolution loop) drives.
StrategyDecision set_passive_order_data(const PortfolioState& state, double alpha,
                                        double alpha_sd, const StrategyParams& p);

// Adapter binding params and alpha_sd into the simulator callback.
StrategyFn make_strategy(const StrategyParams& p, double alpha_sd);

}  // namespace evobt
