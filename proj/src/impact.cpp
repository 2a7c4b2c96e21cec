// impact.cpp
#include "evobt/impact.hpp"

#include <cmath>

namespace evobt {

double decay_kernel(double tau_seconds, const ImpactParams& p) {
    if (tau_seconds < 0.0) throw std::runtime_error("decay_kernel: negative lag");
    const double base = p.tau0_seconds / (tau_seconds + p.tau0_seconds);
    if (p.beta == 0.5) return std::sqrt(base);
    return std::pow(base, p.beta);
}

double size_factor(double q_usd, const ImpactParams& p) {
    if (q_usd == 0.0) return 0.0;
    const double mag = std::pow(std::abs(q_usd) / p.daily_volume_usd, p.delta);
    return q_usd > 0.0 ? mag : -mag;
}

void validate_log(const TradeLog& log) {
    for (std::size_t i = 1; i < log.size(); ++i)
        if (log[i].t_seconds < log[i - 1].t_seconds)
            throw std::runtime_error("trade log: timestamps must be non-decreasing (index " +
                                     std::to_string(i) + ")");
}

ImpactReport charge(const TradeLog& log, const ImpactParams& p) {
    p.validate();
    validate_log(log);

    const std::size_t n = log.size();
    ImpactReport rep;
    rep.per_trade_costs.resize(n, 0.0);

    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = size_factor(log[i].q_usd, p);

    const bool sqrt_kernel = p.beta == 0.5;
    double perm_sum = 0.0;
    double abs_volume = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        perm_sum += s[i];
        double trans_sum = 0.0;
        const double ti = static_cast<double>(log[i].t_seconds);
        for (std::size_t j = 0; j <= i; ++j) {
            const double base = p.tau0_seconds / (ti - static_cast<double>(log[j].t_seconds) +
                                                  p.tau0_seconds);
            trans_sum += s[j] * (sqrt_kernel ? std::sqrt(base) : std::pow(base, p.beta));
        }
        const double dislocation = p.alpha_perm * perm_sum + p.alpha_trans * trans_sum;
        const double cost = dislocation * log[i].q_usd;
        rep.per_trade_costs[i] = cost;
        rep.per_interval[log[i].t_seconds] += cost;
        rep.total_cost += cost;
        abs_volume += std::abs(log[i].q_usd);
    }
    rep.cost_bps = abs_volume > 0.0 ? rep.total_cost / abs_volume * 1e4 : 0.0;
    return rep;
}

}  // namespace evobt
