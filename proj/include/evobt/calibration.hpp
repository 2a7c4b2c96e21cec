// calibration.hpp — random search warmup plus TPE-guided refinement.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evobt/params.hpp"

namespace evobt {

struct TrialRecord {
    std::size_t index = 0;
    Genome genome;
    double objective = 0.0;
    bool failed = false;
    bool guided = false;  // proposed by TPE rather than drawn uniformly
};

struct TpeConfig {
    std::size_t n_random = 30;
    std::size_t n_guided = 90;
    double gamma = 0.25;        // elite set: top ceil(gamma * sqrt(n)) trials
    std::size_t n_candidates = 24;
    std::uint64_t seed = 0;
};

// Uniform draw on each dimension's sampling scale (log10 for log params).
Genome sample_random(const ParamSpace& space, std::mt19937_64& rng);

// Split finished trials into a small elite frontier and the rest, fit a
// per-dimension truncated Gaussian KDE to each side, draw candidates from the
// elite density and keep the one maximizing the elite/rest likelihood ratio.
// Degenerate histories (nothing to split on) fall back to a random draw.
Genome tpe_propose(const std::vector<TrialRecord>& history, const ParamSpace& space,
                   const TpeConfig& cfg, std::mt19937_64& rng);

using Objective = std::function<double(const Genome&)>;

struct CalibrationResult {
    std::vector<TrialRecord> trials;
    Genome best_genome;
    double best_objective = 0.0;
    std::vector<double> convergence;  // running best objective per trial
};

// Maximize the objective. Objective exceptions or non-finite returns mark the
// trial failed; failed trials never enter the KDE fits or the argmax.
CalibrationResult calibrate(const ParamSpace& space, const Objective& objective,
                            const TpeConfig& cfg);

void write_trials_jsonl(const std::vector<TrialRecord>& trials, const std::string& path);

}  // namespace evobt
