// config.hpp — one JSON document configures every module; defaults are the
// baseline constants used throughout.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "evobt/calibration.hpp"
#include "evobt/evolution.hpp"
#include "evobt/forecaster.hpp"
#include "evobt/impact.hpp"
#include "evobt/market_data.hpp"
#include "evobt/params.hpp"
#include "evobt/simulator.hpp"
#include "json.hpp"

namespace evobt {

struct DataConfig {
    std::string csv_path;  // empty means synthesize
    CsvSchema csv_schema;
    SynthConfig synth;
};

struct RunConfig {
    DataConfig data;
    SplitSpec splits;
    SimConfig sim;
    ImpactParams impact;
    Genome strategy;  // overrides merged over StrategyParams defaults
    CalcsetConfig calcset;
    RidgeConfig forecaster;
    TpeConfig calibration;
    ParamSpace space;
    EvolveConfig evolution;
    SelectionConfig selection;
    std::vector<double> candidate_windows;  // feature library for selection
    std::string out_dir = "out";

    static RunConfig defaults();
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Apply environment overrides: EVOBT_SECTION__KEY=value sets
// config[section][key]; values parse as JSON scalars when possible.
void apply_env_overrides(nlohmann::json& j, const char* prefix = "EVOBT_");

RunConfig load_config(const std::string& path_or_empty, bool use_env = true);

}  // namespace evobt
