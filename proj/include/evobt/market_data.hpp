// market_data.hpp — CSV ingestion, chronological splits, synthetic series.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evobt/bar.hpp"

namespace evobt {

// Column-name remapping for load_csv. Keys are the canonical names
// (timestamp, open, high, low, close, volume); values the header names
// actually present in the file. Missing keys fall back to the canonical name.
using CsvSchema = std::map<std::string, std::string>;

// Parse "YYYY-MM-DD" into days since the Unix epoch. Throws on bad input.
std::int64_t parse_utc_date(const std::string& s);

// Parse an ISO-8601 date or datetime ("YYYY-MM-DD[ T]HH:MM[:SS][Z]") or a
// plain epoch-seconds number into epoch minutes. Fractional minutes truncate.
std::int64_t parse_timestamp_minutes(const std::string& s);

// Load a minute-bar CSV. A header row is required. Rows failing per-bar
// sanity are rejected with their 1-based data row index in the error.
// Non-monotone timestamps are an error, gaps are allowed.
BarSeries load_csv(const std::string& path, const CsvSchema& schema = {});

struct SplitResult {
    BarSeries train;
    BarSeries validation;
    BarSeries test;
    std::size_t dropped = 0;  // bars outside every split window
    std::vector<std::string> warnings;
};

// Assign bars to train/validation/test per the spec boundaries. Bars outside
// all three windows are dropped (counted); an empty split is a warning.
SplitResult split(const BarSeries& series, const SplitSpec& spec);

struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t n_minutes = 1440;
    double base_price = 50000.0;
    double vol_per_min = 5e-4;
    double signal_coef = 0.0;       // stationary sd of the predictable return part
    double signal_halflife = 30.0;  // minutes; AR(1) decay of the latent signal
};

// Geometric random walk with an optional AR(1) predictable component folded
// into the per-minute log return. Deterministic for a given seed.
BarSeries synthesize(const SynthConfig& cfg);

void write_csv(const BarSeries& series, const std::string& path);

}  // namespace evobt
