#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "occgrasp/decision.hpp"

namespace occgrasp {

/// Sweep and benchmark settings. `pipeline` carries every filter, generator,
/// sampler and quality parameter; the rest describes the synthetic scenes.
struct ExperimentConfig {
    ExperimentConfig() { pipeline.center_at_centroid = true; }

    PipelineConfig pipeline;
    std::vector<double> alpha_grid{0.0, 0.1, 0.2, 0.3, 0.4};
    std::size_t trials_per_alpha = 10;
    std::uint64_t seed = 0;
    std::vector<Mode> modes{Mode::Baseline, Mode::NoDropout, Mode::Dropout};

    std::size_t fruit_points = 4000;
    double fruit_scale = 0.007;  ///< teardrop height (m)
    double leaf_aspect = 0.6;
    double leaf_thickness = 0.01;
    std::size_t clutter_points = 16;  ///< far outliers injected before cleaning and cropping
    double crop_pad = 0.005;          ///< (m) padding of the per-fruit crop box
    std::size_t fruits_per_trial = 5;

    std::size_t bench_points = 200000;
    std::size_t bench_reps = 5;
    std::size_t bench_grasps = 200;

    std::size_t threads = 0;  ///< 0: OCCGRASP_THREADS or hardware concurrency
    std::string out_dir;

    void validate() const;
};

/// Parses a flat JSON object. Unknown keys, wrong types and out-of-range
/// values raise ConfigError naming the key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every recognised key with its effective value.
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace occgrasp
