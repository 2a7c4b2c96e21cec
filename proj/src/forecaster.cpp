// forecaster.cpp
#include "evobt/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace evobt {

std::vector<double> step_returns(const BarSeries& series, bool log_returns) {
    std::vector<double> r(series.size(), 0.0);
    for (std::size_t t = 1; t < series.size(); ++t) {
        const double prev = series[t - 1].close;
        r[t] = log_returns ? std::log(series[t].close / prev) : series[t].close / prev - 1.0;
        if (!std::isfinite(r[t])) r[t] = 0.0;
    }
    return r;
}

std::vector<double> ema(const std::vector<double>& x, double window, EmaMode mode) {
    if (window <= 0.0) throw std::runtime_error("ema: window must be positive");
    const double a = mode == EmaMode::span ? 2.0 / (window + 1.0)
                                           : 1.0 - std::pow(2.0, -1.0 / window);
    std::vector<double> y(x.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        acc = t == 0 ? x[0] : (1.0 - a) * acc + a * x[t];
        y[t] = acc;
    }
    return y;
}

FeatureMatrix default_calcset(const BarSeries& series, const CalcsetConfig& cfg) {
    const auto r = step_returns(series, cfg.log_returns);
    FeatureMatrix m;
    m.timestamps.reserve(series.size());
    for (const Bar& b : series.bars) m.timestamps.push_back(b.ts_min);
    m.values.resize(static_cast<Eigen::Index>(series.size()),
                    static_cast<Eigen::Index>(cfg.windows.size()));
    for (std::size_t c = 0; c < cfg.windows.size(); ++c) {
        const double w = cfg.windows[c];
        std::string label = std::to_string(w);
        label.erase(label.find_last_not_of('0') + 1);
        if (!label.empty() && label.back() == '.') label.pop_back();
        m.names.push_back("ema_ret_" + label);
        const auto col = ema(r, w, cfg.mode);
        for (std::size_t t = 0; t < col.size(); ++t)
            m.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
                std::isfinite(col[t]) ? col[t] : 0.0;
    }
    return m;
}

std::vector<double> forward_returns(const BarSeries& series, int horizon, bool log_returns) {
    if (horizon <= 0) throw std::runtime_error("forward_returns: horizon must be positive");
    std::vector<double> y(series.size(), 0.0);
    for (std::size_t t = 0; t + horizon < series.size(); ++t) {
        const double now = series[t].close;
        const double fut = series[t + horizon].close;
        y[t] = log_returns ? std::log(fut / now) : fut / now - 1.0;
        if (!std::isfinite(y[t])) y[t] = 0.0;
    }
    return y;
}

int RidgeModel::primary_column() const {
    for (std::size_t i = 0; i < horizons.size(); ++i)
        if (horizons[i] == primary_horizon) return static_cast<int>(i);
    throw std::runtime_error("ridge model: primary horizon missing");
}

RidgeModel fit_ridge(const FeatureMatrix& x, const BarSeries& series, const RidgeConfig& cfg) {
    if (x.rows() != series.size())
        throw std::runtime_error("fit_ridge: features do not align with series");
    if (x.rows() == 0 || x.cols() == 0) throw std::runtime_error("fit_ridge: empty features");
    if (cfg.lambda < 0.0) throw std::runtime_error("fit_ridge: negative lambda");

    const Eigen::Index n = x.values.rows();
    const Eigen::Index k = x.values.cols();
    const Eigen::Index h = static_cast<Eigen::Index>(cfg.horizons.size());

    Eigen::MatrixXd y(n, h);
    for (Eigen::Index c = 0; c < h; ++c) {
        const auto fwd = forward_returns(series, cfg.horizons[c], cfg.log_returns);
        for (Eigen::Index t = 0; t < n; ++t) y(t, c) = fwd[t];
    }

    Eigen::MatrixXd gram = x.values.transpose() * x.values;
    gram.diagonal().array() += cfg.lambda;
    const Eigen::MatrixXd rhs = x.values.transpose() * y;

    RidgeModel model;
    model.feature_names = x.names;
    model.horizons = cfg.horizons;
    model.primary_horizon = cfg.primary_horizon;
    model.lambda = cfg.lambda;
    model.weights = gram.ldlt().solve(rhs);
    if (!model.weights.allFinite()) throw std::runtime_error("fit_ridge: singular system");

    const Eigen::VectorXd fit = x.values * model.weights.col(model.primary_column());
    const double mean = fit.mean();
    double ss = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) ss += (fit(t) - mean) * (fit(t) - mean);
    model.alpha_sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    return model;
}

std::string RidgeModel::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["feature_names"] = feature_names;
    j["horizons"] = horizons;
    j["primary_horizon"] = primary_horizon;
    j["lambda"] = lambda;
    j["alpha_sd"] = alpha_sd;
    std::vector<std::vector<double>> w(weights.rows());
    for (Eigen::Index i = 0; i < weights.rows(); ++i)
        for (Eigen::Index c = 0; c < weights.cols(); ++c) w[i].push_back(weights(i, c));
    j["weights"] = w;
    return j.dump(2);
}

RidgeModel RidgeModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    RidgeModel m;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.horizons = j.at("horizons").get<std::vector<int>>();
    m.primary_horizon = j.at("primary_horizon").get<int>();
    m.lambda = j.at("lambda").get<double>();
    m.alpha_sd = j.at("alpha_sd").get<double>();
    const auto w = j.at("weights").get<std::vector<std::vector<double>>>();
    m.weights.resize(static_cast<Eigen::Index>(w.size()),
                     static_cast<Eigen::Index>(m.horizons.size()));
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i].size() != m.horizons.size())
            throw std::runtime_error("ridge model: ragged weight matrix");
        for (std::size_t c = 0; c < w[i].size(); ++c)
            m.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = w[i][c];
    }
    return m;
}

std::vector<double> AlphaSeries::primary() const {
    Eigen::Index col = -1;
    for (std::size_t i = 0; i < horizons.size(); ++i)
        if (horizons[i] == primary_horizon) col = static_cast<Eigen::Index>(i);
    if (col < 0) throw std::runtime_error("alpha series: primary horizon missing");
    std::vector<double> out(timestamps.size());
    for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = values(static_cast<Eigen::Index>(t), col);
    return out;
}

AlphaSeries predict_alpha(const RidgeModel& model, const FeatureMatrix& x) {
    if (x.names != model.feature_names)
        throw std::runtime_error("predict_alpha: feature names do not match the model");
    AlphaSeries a;
    a.timestamps = x.timestamps;
    a.horizons = model.horizons;
    a.primary_horizon = model.primary_horizon;
    a.alpha_sd = model.alpha_sd;
    a.values = x.values * model.weights;
    return a;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) return 0.0;
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t q = i; q <= j; ++q) ranks[idx[q]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return 0.0;
    return pearson(average_ranks(a), average_ranks(b));
}

double combine_score(double r2, double ic_mean, double icir) {
    auto clamp = [](double x, double lim) { return x < -lim ? -lim : (x > lim ? lim : x); };
    return 0.4 * clamp(r2, 1.0) + 0.3 * clamp(ic_mean, 1.0) + 0.3 * clamp(icir, 5.0) / 5.0;
}

ForecastScore score_forecast(const std::vector<double>& pred, const std::vector<double>& realized,
                             const std::vector<std::int64_t>& timestamps) {
    if (pred.size() != realized.size() || pred.size() != timestamps.size())
        throw std::runtime_error("score_forecast: length mismatch");
    ForecastScore s;
    if (pred.empty()) return s;

    double sse = 0.0, syy = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        const double e = realized[t] - pred[t];
        sse += e * e;
        syy += realized[t] * realized[t];
    }
    s.r2 = syy > 0.0 ? 1.0 - sse / syy : 0.0;

    std::size_t start = 0;
    for (std::size_t t = 1; t <= pred.size(); ++t) {
        if (t == pred.size() || timestamps[t] / 1440 != timestamps[start] / 1440) {
            std::vector<double> dp(pred.begin() + start, pred.begin() + t);
            std::vector<double> dr(realized.begin() + start, realized.begin() + t);
            s.daily_ic.push_back(spearman(dp, dr));
            start = t;
        }
    }
    s.n_days = s.daily_ic.size();

    const double n = static_cast<double>(s.n_days);
    s.ic_mean = std::accumulate(s.daily_ic.begin(), s.daily_ic.end(), 0.0) / n;
    if (s.n_days < 2) {
        s.icir = 0.0;
        s.icir_defined = false;
    } else {
        double ss = 0.0;
        for (double ic : s.daily_ic) ss += (ic - s.ic_mean) * (ic - s.ic_mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        if (sd > 0.0)
            s.icir = s.ic_mean / sd;
        else if (s.ic_mean != 0.0)
            s.icir = s.ic_mean > 0.0 ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity();
        else
            s.icir = 0.0;
    }
    s.combined = combine_score(s.r2, s.ic_mean, s.icir);
    return s;
}

std::vector<std::string> greedy_select(const FeatureMatrix& candidates,
                                       const std::vector<double>& target,
                                       const SelectionConfig& cfg) {
    if (candidates.rows() != target.size())
        throw std::runtime_error("greedy_select: target does not align with candidates");
    const std::size_t k = candidates.cols();
    std::vector<std::vector<double>> cols(k, std::vector<double>(candidates.rows()));
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t t = 0; t < candidates.rows(); ++t)
            cols[c][t] = candidates.values(static_cast<Eigen::Index>(t),
                                           static_cast<Eigen::Index>(c));

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(k);
    for (std::size_t c = 0; c < k; ++c) score[c] = std::abs(pearson(cols[c], target));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return score[i] > score[j]; });

    std::vector<std::string> picked;
    std::vector<std::size_t> picked_idx;
    for (std::size_t c : order) {
        if (picked.size() >= cfg.max_k) break;
        bool redundant = false;
        for (std::size_t p : picked_idx)
            if (std::abs(pearson(cols[c], cols[p])) >= cfg.corr_cap) {
                redundant = true;
                break;
            }
        if (redundant) continue;
        picked.push_back(candidates.names[c]);
        picked_idx.push_back(c);
    }
    return picked;
}

}  // namespace evobt
