// params.hpp — flat genomes and bounded parameter spaces.
#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace evobt {

// A genome is a flat map of UPPER_CASE constant names to values. Strategy
// parameters, calibration trials and evolution candidates all share this shape.
using Genome = std::map<std::string, double>;

enum class Scale { linear, log10 };

struct ParamSpec {
    std::string name;  // genome key
    double lower = 0.0;
    double upper = 1.0;
    Scale scale = Scale::linear;

    // Transform to the sampling scale and back.
    double to_scale(double x) const { return scale == Scale::log10 ? std::log10(x) : x; }
    double from_scale(double u) const { return scale == Scale::log10 ? std::pow(10.0, u) : u; }
    double lo_scaled() const { return to_scale(lower); }
    double hi_scaled() const { return to_scale(upper); }

    double clip(double x) const { return x < lower ? lower : (x > upper ? upper : x); }

    // Position of x in [0, 1] along the sampling scale.
    double unit(double x) const {
        const double a = lo_scaled(), b = hi_scaled();
        if (b <= a) return 0.0;
        return (to_scale(clip(x)) - a) / (b - a);
    }

    void validate() const {
        if (!(lower < upper)) throw std::runtime_error("param " + name + ": lower >= upper");
        if (scale == Scale::log10 && lower <= 0.0)
            throw std::runtime_error("param " + name + ": log scale needs positive bounds");
    }
};

struct ParamSpace {
    std::vector<ParamSpec> dims;

    const ParamSpec* find(const std::string& name) const {
        for (const auto& d : dims)
            if (d.name == name) return &d;
        return nullptr;
    }

    void validate() const {
        for (const auto& d : dims) d.validate();
    }
};

// Tunable strategy parameters and their bounds. Q_MAX stays fixed by design,
// so it is not part of the search space.
inline ParamSpace default_param_space() {
    return ParamSpace{{
        {"SIZING_FACTOR", 500.0, 50000.0, Scale::log10},
        {"MAX_TRADE_FRAC", 0.01, 0.5, Scale::linear},
        {"MIN_TRADE_SIZE_USD", 0.0, 5000.0, Scale::linear},
        {"ALPHA_ADJUSTMENT_KNOB", 0.0, 1.0, Scale::linear},
        {"RISK_REDUCTION_FACTOR", 0.0, 1.0, Scale::linear},
        {"ZP", 1e-6, 1e-2, Scale::log10},
        {"ZP_RISKOFF", 1e-6, 1e-2, Scale::log10},
        {"FAST_FLAT_MINUTES", 2.0, 60.0, Scale::linear},
    }};
}

}  // namespace evobt
