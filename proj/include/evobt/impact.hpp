// impact.hpp — propagator-style market impact charges over a trade log.
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace evobt {

struct ImpactParams {
    double daily_volume_usd = 2e9;  // V
    double alpha_perm = 0.005;
    double alpha_trans = 0.010;
    double tau0_seconds = 300.0;
    double beta = 0.5;   // transient decay exponent, (0, 2)
    double delta = 0.5;  // size exponent, (0, 2)

    void validate() const {
        if (daily_volume_usd <= 0.0) throw std::runtime_error("impact: V must be positive");
        if (alpha_perm < 0.0 || alpha_trans < 0.0)
            throw std::runtime_error("impact: negative coefficient");
        if (beta <= 0.0 || beta >= 2.0 || delta <= 0.0 || delta >= 2.0)
            throw std::runtime_error("impact: beta and delta must lie in (0, 2)");
        if (tau0_seconds <= 0.0) throw std::runtime_error("impact: tau0 must be positive");
    }
};

// One executed trade: time in seconds, signed notional in USD (buys positive).
struct Trade {
    std::int64_t t_seconds = 0;
    double q_usd = 0.0;
};

// Non-decreasing in time. Trades sharing a timestamp are ordered by log
// position; each sees the dislocation of everything before it plus itself.
using TradeLog = std::vector<Trade>;

struct ImpactReport {
    std::vector<double> per_trade_costs;            // aligned with the log
    std::map<std::int64_t, double> per_interval;    // cost summed per timestamp
    double total_cost = 0.0;
    double cost_bps = 0.0;  // total_cost / sum(|q|) * 1e4, zero when no volume
};

// Transient decay kernel G(tau) = (tau0 / (tau + tau0))^beta, G(0) = 1.
double decay_kernel(double tau_seconds, const ImpactParams& p);

// Signed square-root-style size factor s = sign(q) * (|q| / V)^delta.
double size_factor(double q_usd, const ImpactParams& p);

// Charge every trade the prevailing dislocation:
//   D(t_i) = alpha_perm * sum_{j<=i} s_j + alpha_trans * sum_{j<=i} s_j G(t_i - t_j)
//   c_i    = D(t_i) * q_i
// The permanent sum is maintained incrementally; the transient sum is an
// explicit loop over prior trades.
ImpactReport charge(const TradeLog& log, const ImpactParams& p);

void validate_log(const TradeLog& log);

}  // namespace evobt
