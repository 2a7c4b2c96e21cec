// stats.cpp
#include "evobt/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace evobt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

DailyPnlSeries aggregate_daily(const std::vector<LedgerRow>& ledger) {
    DailyPnlSeries d;
    for (const LedgerRow& r : ledger) {
        const std::int64_t day = r.ts_min >= 0 ? r.ts_min / 1440 : (r.ts_min - 1439) / 1440;
        if (d.day.empty() || d.day.back() != day) {
            if (!d.day.empty() && day < d.day.back())
                throw std::runtime_error("aggregate_daily: ledger out of order");
            d.day.push_back(day);
            d.pnl_adj.push_back(0.0);
            d.pnl_net.push_back(0.0);
            d.pnl_pos.push_back(0.0);
            d.volume_usd.push_back(0.0);
        }
        d.pnl_adj.back() += r.pnl_adj;
        d.pnl_net.back() += r.pnl_net;
        d.pnl_pos.back() += r.pnl_pos;
        if (r.fill) d.volume_usd.back() += std::abs(r.fill->qty_btc * r.fill->price);
    }
    return d;
}

bool reconciles(const DailyPnlSeries& daily, const std::vector<LedgerRow>& ledger,
                double rel_tol) {
    const DailyPnlSeries ref = aggregate_daily(ledger);
    if (ref.size() != daily.size()) return false;
    auto close = [rel_tol](double a, double b) {
        return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
    };
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (ref.day[i] != daily.day[i]) return false;
        if (!close(ref.pnl_adj[i], daily.pnl_adj[i]) || !close(ref.pnl_net[i], daily.pnl_net[i]) ||
            !close(ref.pnl_pos[i], daily.pnl_pos[i]) ||
            !close(ref.volume_usd[i], daily.volume_usd[i]))
            return false;
    }
    return true;
}

PerfMetrics perf_metrics(const DailyPnlSeries& daily, const std::vector<LedgerRow>& ledger,
                         const PerfConfig& cfg) {
    PerfMetrics m;
    m.n_days = daily.size();
    if (daily.size() == 0) {
        m.degenerate = true;
        return m;
    }

    const double n = static_cast<double>(daily.size());
    const double ann = std::sqrt(cfg.annualization_days);
    const double sum = [&] {
        double s = 0.0;
        for (double v : daily.pnl_adj) s += v;
        return s;
    }();
    const double mean_sign = sum > 0.0 ? 1.0 : (sum < 0.0 ? -1.0 : 0.0);

    for (std::size_t i = 0; i < daily.size(); ++i) {
        m.total_pnl_adj += daily.pnl_adj[i];
        m.total_pnl_net += daily.pnl_net[i];
        m.total_pnl_pos += daily.pnl_pos[i];
        m.total_volume_usd += daily.volume_usd[i];
        if (daily.pnl_adj[i] > 0.0) m.win_rate_daily += 1.0;
    }
    m.win_rate_daily /= n;
    m.total_impact_cost = m.total_pnl_net - m.total_pnl_adj;
    m.impact_bps =
        m.total_volume_usd > 0.0 ? m.total_impact_cost / m.total_volume_usd * 1e4 : 0.0;

    // The dimensionless ratios below are formed as quotients of quantities
    // that all scale with the same power of the PnL unit before any root is
    // taken, so uniformly rescaling the series cancels exactly.
    double tt = 0.0;  // sum of (n*x_i - sum)^2 = n^2 (n-1) var / n ... exact shape
    for (double v : daily.pnl_adj) {
        const double d = n * v - sum;
        tt += d * d;
    }
    if (tt > 0.0) {
        m.sharpe = mean_sign * std::sqrt(sum * sum * (n - 1.0) / tt) * ann;
    } else {
        m.sharpe = mean_sign * kInf;
        if (mean_sign == 0.0) m.sharpe = 0.0;
        m.degenerate = true;
    }

    // Downside deviation: RMS of the negative days about zero.
    double dss = 0.0, m_down = 0.0;
    for (double v : daily.pnl_adj)
        if (v < 0.0) {
            dss += v * v;
            m_down += 1.0;
        }
    if (dss > 0.0) {
        m.sortino = mean_sign * std::sqrt(sum * sum * m_down / (n * n * dss)) * ann;
    } else {
        m.sortino = mean_sign * kInf;
        if (mean_sign == 0.0) m.sortino = 0.0;
        m.degenerate = true;
    }

    double cum = 0.0, peak = 0.0, dd = 0.0;
    for (double v : daily.pnl_adj) {
        cum += v;
        peak = std::max(peak, cum);
        dd = std::min(dd, cum - peak);
    }
    m.max_drawdown = dd;
    if (dd < 0.0) {
        m.calmar = sum / (n * std::abs(dd)) * cfg.annualization_days;
    } else {
        m.calmar = mean_sign * kInf;
        if (mean_sign == 0.0) m.calmar = 0.0;
        m.degenerate = true;
    }

    std::size_t wins = 0;
    for (const LedgerRow& r : ledger)
        if (r.fill) {
            ++m.n_trades;
            if (r.pnl_adj > 0.0) ++wins;
        }
    m.win_rate_per_trade =
        m.n_trades > 0 ? static_cast<double>(wins) / static_cast<double>(m.n_trades) : 0.0;
    return m;
}

double sizing_counterfactual(double base_pnl_net, double base_impact_cost, double k,
                             double impact_exponent) {
    if (k < 0.0) throw std::runtime_error("sizing_counterfactual: negative scale");
    return k * base_pnl_net - std::pow(k, impact_exponent) * base_impact_cost;
}

NullModel NullModel::from_sharpe(double pnl0, double sharpe0, double window_days) {
    if (sharpe0 <= 0.0) throw std::runtime_error("null model: sharpe must be positive");
    if (window_days <= 0.0) throw std::runtime_error("null model: window must be positive");
    return NullModel{pnl0, pnl0 / sharpe0, window_days};
}

NullModel NullModel::rescaled(double new_pnl0, double new_window_days) const {
    if (window_days <= 0.0 || new_window_days <= 0.0)
        throw std::runtime_error("null model: window must be positive");
    return NullModel{new_pnl0, sigma0 * std::sqrt(new_window_days / window_days),
                     new_window_days};
}

double phacking_ceiling(const NullModel& null, std::size_t k_experiments) {
    if (k_experiments == 0) throw std::runtime_error("phacking_ceiling: K must be positive");
    return null.pnl0 + null.sigma0 * std::sqrt(2.0 * std::log(static_cast<double>(k_experiments)));
}

double z_excess(double observed_pnl, const NullModel& null) {
    if (null.sigma0 <= 0.0) throw std::runtime_error("z_excess: sigma0 must be positive");
    return (observed_pnl - null.pnl0) / null.sigma0;
}

IsOosCurve is_oos_curve(const std::vector<double>& is_fitness,
                        const std::vector<double>& oos_fitness) {
    if (is_fitness.size() != oos_fitness.size())
        throw std::runtime_error("is_oos_curve: length mismatch");
    IsOosCurve c;
    double best = -kInf;
    double best_oos = 0.0;
    std::size_t champ = 0;
    for (std::size_t i = 0; i < is_fitness.size(); ++i) {
        if (std::isfinite(is_fitness[i]) && is_fitness[i] > best) {
            best = is_fitness[i];
            best_oos = oos_fitness[i];
            champ = i;
        }
        c.is_best.push_back(best);
        c.oos_of_best.push_back(best_oos);
        c.champion_id.push_back(champ);
    }
    return c;
}

}  // namespace evobt
