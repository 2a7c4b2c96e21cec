// calibration.cpp
#include "evobt/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "json.hpp"

namespace evobt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// One-dimensional KDE truncated to [lo, hi], with a uniform component over
// the whole range mixed in as an extra kernel. The uniform mass keeps every
// region sampleable and stops the elite model from collapsing onto whatever
// cluster happened to lead early; without it the proposal variance shrinks
// toward zero and the search freezes off-optimum.
struct Kde {
    std::vector<double> centers;
    double bandwidth = 1.0;
    double lo = 0.0;
    double hi = 1.0;

    static double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

    double log_density(double x) const {
        double acc = 1.0 / (hi - lo);  // the uniform component
        for (double c : centers) {
            const double mass = norm_cdf((hi - c) / bandwidth) - norm_cdf((lo - c) / bandwidth);
            if (mass <= 0.0) continue;
            const double z = (x - c) / bandwidth;
            acc += std::exp(-0.5 * z * z) /
                   (bandwidth * std::sqrt(2.0 * std::numbers::pi) * mass);
        }
        acc /= static_cast<double>(centers.size() + 1);
        return acc > 0.0 ? std::log(acc) : -1e300;
    }

    double sample(std::mt19937_64& rng) const {
        std::uniform_int_distribution<std::size_t> pick(0, centers.size());
        std::normal_distribution<double> gauss(0.0, 1.0);
        const std::size_t which = pick(rng);
        if (which == centers.size()) {
            std::uniform_real_distribution<double> u(lo, hi);
            return u(rng);
        }
        const double c = centers[which];
        for (int tries = 0; tries < 64; ++tries) {
            const double x = c + bandwidth * gauss(rng);
            if (x >= lo && x <= hi) return x;
        }
        return std::clamp(c, lo, hi);
    }
};

// history counts every finite trial so far; the bandwidth floor shrinks with
// it, not with the (much smaller) set being fit, so a tight elite frontier
// still gets narrow kernels late in the run.
Kde fit_kde(const std::vector<double>& values, double lo, double hi, std::size_t history) {
    Kde k;
    k.centers = values;
    k.lo = lo;
    k.hi = hi;
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    const double floor = (hi - lo) / std::min(100.0, static_cast<double>(history) + 2.0);
    k.bandwidth = std::clamp(1.06 * sd * std::pow(n, -0.2), floor, hi - lo);
    return k;
}

}  // namespace

Genome sample_random(const ParamSpace& space, std::mt19937_64& rng) {
    Genome g;
    for (const ParamSpec& d : space.dims) {
        std::uniform_real_distribution<double> u(d.lo_scaled(), d.hi_scaled());
        g[d.name] = d.clip(d.from_scale(u(rng)));
    }
    return g;
}

Genome tpe_propose(const std::vector<TrialRecord>& history, const ParamSpace& space,
                   const TpeConfig& cfg, std::mt19937_64& rng) {
    std::vector<const TrialRecord*> valid;
    for (const auto& t : history)
        if (!t.failed && std::isfinite(t.objective)) valid.push_back(&t);

    const auto degenerate = [&]() {
        if (valid.size() < 2) return true;
        const double first = valid.front()->objective;
        for (const auto* t : valid)
            if (t->objective != first) return false;
        return true;
    }();
    if (degenerate) return sample_random(space, rng);

    std::stable_sort(valid.begin(), valid.end(),
                     [](const TrialRecord* a, const TrialRecord* b) {
                         return a->objective > b->objective;
                     });
    // The good model tracks the frontier: a handful of the very best trials,
    // growing with the square root of history. A linear fraction drags the
    // whole trail of superseded points along and the proposals lag behind.
    const std::size_t n_elite = std::max<std::size_t>(
        1, std::min<std::size_t>(25, static_cast<std::size_t>(std::ceil(
                                         cfg.gamma *
                                         std::sqrt(static_cast<double>(valid.size()))))));

    Genome proposal;
    for (const ParamSpec& d : space.dims) {
        const double lo = d.lo_scaled(), hi = d.hi_scaled();
        std::vector<double> elite, rest;
        for (std::size_t i = 0; i < valid.size(); ++i) {
            const auto it = valid[i]->genome.find(d.name);
            if (it == valid[i]->genome.end()) continue;
            (i < n_elite ? elite : rest).push_back(d.to_scale(d.clip(it->second)));
        }
        if (elite.empty()) {
            std::uniform_real_distribution<double> u(lo, hi);
            proposal[d.name] = d.clip(d.from_scale(u(rng)));
            continue;
        }
        const Kde good = fit_kde(elite, lo, hi, valid.size());
        std::optional<Kde> bad;
        if (!rest.empty()) bad = fit_kde(rest, lo, hi, valid.size());

        double best_x = elite.front();
        double best_score = kNegInf;
        for (std::size_t c = 0; c < cfg.n_candidates; ++c) {
            const double x = good.sample(rng);
            const double lg = good.log_density(x);
            const double lb = bad ? bad->log_density(x) : -std::log(hi - lo);
            const double score = lg - lb;
            if (score > best_score) {
                best_score = score;
                best_x = x;
            }
        }
        proposal[d.name] = d.clip(d.from_scale(best_x));
    }
    return proposal;
}

CalibrationResult calibrate(const ParamSpace& space, const Objective& objective,
                            const TpeConfig& cfg) {
    space.validate();
    std::mt19937_64 rng(cfg.seed);
    CalibrationResult res;
    res.best_objective = kNegInf;

    const std::size_t total = cfg.n_random + cfg.n_guided;
    for (std::size_t i = 0; i < total; ++i) {
        TrialRecord t;
        t.index = i;
        t.guided = i >= cfg.n_random;
        t.genome = t.guided ? tpe_propose(res.trials, space, cfg, rng)
                            : sample_random(space, rng);
        try {
            t.objective = objective(t.genome);
            if (!std::isfinite(t.objective)) t.failed = true;
        } catch (const std::exception&) {
            t.failed = true;
        }
        if (t.failed) t.objective = kNegInf;
        if (!t.failed && t.objective > res.best_objective) {
            res.best_objective = t.objective;
            res.best_genome = t.genome;
        }
        res.convergence.push_back(res.best_objective);
        res.trials.push_back(std::move(t));
    }
    if (res.best_genome.empty())
        throw std::runtime_error("calibrate: every trial failed");
    return res;
}

void write_trials_jsonl(const std::vector<TrialRecord>& trials, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trials: " + path);
    for (const TrialRecord& t : trials) {
        nlohmann::json j{{"index", t.index},
                         {"genome", t.genome},
                         {"failed", t.failed},
                         {"phase", t.guided ? "guided" : "random"}};
        j["objective"] = t.failed ? nlohmann::json() : nlohmann::json(t.objective);
        out << j.dump() << '\n';
    }
}

}  // namespace evobt
