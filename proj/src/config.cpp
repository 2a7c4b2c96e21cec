// config.cpp
#include "evobt/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

extern char** environ;

namespace evobt {

namespace {

void expect_object(const nlohmann::json& j, const std::string& name) {
    if (!j.is_object()) throw std::runtime_error("config: '" + name + "' must be an object");
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& slot) {
    if (j.contains(key)) slot = j[key].get<T>();
}

std::int64_t take_day(const nlohmann::json& j, const char* key, std::int64_t fallback) {
    if (!j.contains(key)) return fallback;
    return parse_utc_date(j[key].get<std::string>());
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.splits.train_start_day = parse_utc_date("2022-01-01");
    c.splits.train_end_day = parse_utc_date("2023-12-31");
    c.splits.val_start_day = parse_utc_date("2024-01-01");
    c.splits.val_end_day = parse_utc_date("2024-12-31");
    c.splits.test_start_day = parse_utc_date("2025-01-01");
    c.splits.test_end_day = parse_utc_date("2025-10-10");
    c.space = default_param_space();
    c.candidate_windows = {1, 2, 3, 5, 10, 20, 50, 100};
    return c;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c = defaults();
    expect_object(j, "root");

    if (j.contains("data")) {
        const auto& d = j["data"];
        expect_object(d, "data");
        take(d, "csv_path", c.data.csv_path);
        if (d.contains("csv_schema"))
            for (auto it = d["csv_schema"].begin(); it != d["csv_schema"].end(); ++it)
                c.data.csv_schema[it.key()] = it.value().get<std::string>();
        if (d.contains("synth")) {
            const auto& s = d["synth"];
            expect_object(s, "data.synth");
            take(s, "seed", c.data.synth.seed);
            take(s, "n_minutes", c.data.synth.n_minutes);
            take(s, "base_price", c.data.synth.base_price);
            take(s, "vol_per_min", c.data.synth.vol_per_min);
            take(s, "signal_coef", c.data.synth.signal_coef);
            take(s, "signal_halflife", c.data.synth.signal_halflife);
        }
    }
    if (j.contains("splits")) {
        const auto& s = j["splits"];
        expect_object(s, "splits");
        c.splits.train_start_day = take_day(s, "train_start", c.splits.train_start_day);
        c.splits.train_end_day = take_day(s, "train_end", c.splits.train_end_day);
        c.splits.val_start_day = take_day(s, "val_start", c.splits.val_start_day);
        c.splits.val_end_day = take_day(s, "val_end", c.splits.val_end_day);
        c.splits.test_start_day = take_day(s, "test_start", c.splits.test_start_day);
        c.splits.test_end_day = take_day(s, "test_end", c.splits.test_end_day);
    }
    if (j.contains("sim")) {
        const auto& s = j["sim"];
        expect_object(s, "sim");
        take(s, "hit_ratio", c.sim.hit_ratio);
        take(s, "fee_rate", c.sim.fee_rate);
        take(s, "max_limit_order_usd", c.sim.max_limit_order_usd);
        take(s, "data_lag_minutes", c.sim.data_lag_minutes);
    }
    if (j.contains("impact")) {
        const auto& s = j["impact"];
        expect_object(s, "impact");
        take(s, "daily_volume_usd", c.impact.daily_volume_usd);
        take(s, "alpha_perm", c.impact.alpha_perm);
        take(s, "alpha_trans", c.impact.alpha_trans);
        take(s, "tau0_seconds", c.impact.tau0_seconds);
        take(s, "beta", c.impact.beta);
        take(s, "delta", c.impact.delta);
    }
    if (j.contains("strategy")) {
        expect_object(j["strategy"], "strategy");
        for (auto it = j["strategy"].begin(); it != j["strategy"].end(); ++it)
            c.strategy[it.key()] = it.value().get<double>();
    }
    if (j.contains("forecaster")) {
        const auto& s = j["forecaster"];
        expect_object(s, "forecaster");
        take(s, "lambda", c.forecaster.lambda);
        take(s, "horizons", c.forecaster.horizons);
        take(s, "primary_horizon", c.forecaster.primary_horizon);
        take(s, "log_returns", c.forecaster.log_returns);
        c.calcset.log_returns = c.forecaster.log_returns;
        take(s, "windows", c.calcset.windows);
        if (s.contains("ema_mode")) {
            const auto mode = s["ema_mode"].get<std::string>();
            if (mode == "span")
                c.calcset.mode = EmaMode::span;
            else if (mode == "halflife")
                c.calcset.mode = EmaMode::halflife;
            else
                throw std::runtime_error("config: forecaster.ema_mode must be span or halflife");
        }
    }
    if (j.contains("calibration")) {
        const auto& s = j["calibration"];
        expect_object(s, "calibration");
        take(s, "n_random", c.calibration.n_random);
        take(s, "n_guided", c.calibration.n_guided);
        take(s, "gamma", c.calibration.gamma);
        take(s, "n_candidates", c.calibration.n_candidates);
        take(s, "seed", c.calibration.seed);
        if (s.contains("space")) {
            c.space.dims.clear();
            for (auto it = s["space"].begin(); it != s["space"].end(); ++it) {
                ParamSpec d;
                d.name = it.key();
                d.lower = it.value().at("lower").get<double>();
                d.upper = it.value().at("upper").get<double>();
                const auto scale = it.value().value("scale", std::string("linear"));
                if (scale == "log10")
                    d.scale = Scale::log10;
                else if (scale == "linear")
                    d.scale = Scale::linear;
                else
                    throw std::runtime_error("config: scale must be linear or log10");
                c.space.dims.push_back(d);
            }
        }
    }
    if (j.contains("evolution")) {
        const auto& s = j["evolution"];
        expect_object(s, "evolution");
        take(s, "generations", c.evolution.generations);
        take(s, "gen_size", c.evolution.gen_size);
        take(s, "n_islands", c.evolution.n_islands);
        take(s, "migration_period", c.evolution.migration_period);
        take(s, "migration_rate", c.evolution.migration_rate);
        take(s, "exploit_temp", c.evolution.exploit_temp);
        take(s, "inspiration_k", c.evolution.inspiration_k);
        take(s, "recent_window", c.evolution.recent_window);
        take(s, "budget_cap", c.evolution.budget_cap);
        take(s, "budget_haircut", c.evolution.budget_haircut);
        take(s, "archive_capacity", c.evolution.archive_capacity);
        take(s, "grid_bins", c.evolution.grid_bins);
        take(s, "crossover_fraction", c.evolution.crossover_fraction);
        take(s, "p_mut", c.evolution.p_mut);
        take(s, "sigma_rel", c.evolution.sigma_rel);
        take(s, "seed", c.evolution.seed);
    }
    if (j.contains("selection")) {
        const auto& s = j["selection"];
        expect_object(s, "selection");
        take(s, "max_k", c.selection.max_k);
        take(s, "corr_cap", c.selection.corr_cap);
        take(s, "candidate_windows", c.candidate_windows);
    }
    take(j, "out_dir", c.out_dir);
    return c;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["data"] = {{"csv_path", data.csv_path},
                 {"synth",
                  {{"seed", data.synth.seed},
                   {"n_minutes", data.synth.n_minutes},
                   {"base_price", data.synth.base_price},
                   {"vol_per_min", data.synth.vol_per_min},
                   {"signal_coef", data.synth.signal_coef},
                   {"signal_halflife", data.synth.signal_halflife}}}};
    j["sim"] = {{"hit_ratio", sim.hit_ratio},
                {"fee_rate", sim.fee_rate},
                {"max_limit_order_usd", sim.max_limit_order_usd},
                {"data_lag_minutes", sim.data_lag_minutes}};
    j["impact"] = {{"daily_volume_usd", impact.daily_volume_usd},
                   {"alpha_perm", impact.alpha_perm},
                   {"alpha_trans", impact.alpha_trans},
                   {"tau0_seconds", impact.tau0_seconds},
                   {"beta", impact.beta},
                   {"delta", impact.delta}};
    j["strategy"] = strategy;
    j["out_dir"] = out_dir;
    return j;
}

void apply_env_overrides(nlohmann::json& j, const char* prefix) {
    const std::string pre(prefix);
    for (char** env = environ; *env != nullptr; ++env) {
        const std::string entry(*env);
        if (entry.rfind(pre, 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string path = entry.substr(pre.size(), eq - pre.size());
        const std::string value = entry.substr(eq + 1);

        std::vector<std::string> keys;
        std::size_t pos = 0;
        while (pos <= path.size()) {
            const auto sep = path.find("__", pos);
            std::string key = path.substr(pos, sep == std::string::npos ? path.size() - pos
                                                                        : sep - pos);
            std::transform(key.begin(), key.end(), key.begin(),
                           [](unsigned char ch) { return std::tolower(ch); });
            keys.push_back(key);
            if (sep == std::string::npos) break;
            pos = sep + 2;
        }
        if (keys.empty()) continue;

        nlohmann::json* node = &j;
        for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
        nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
        (*node)[keys.back()] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
    }
}

RunConfig load_config(const std::string& path_or_empty, bool use_env) {
    nlohmann::json j = nlohmann::json::object();
    if (!path_or_empty.empty()) {
        std::ifstream in(path_or_empty);
        if (!in) throw std::runtime_error("cannot open config: " + path_or_empty);
        try {
            j = nlohmann::json::parse(in);
        } catch (const std::exception& e) {
            throw std::runtime_error(path_or_empty + ": " + e.what());
        }
    }
    if (use_env) apply_env_overrides(j);
    return RunConfig::from_json(j);
}

}  // namespace evobt
