#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "occgrasp/config.hpp"
#include "occgrasp/decision.hpp"
#include "occgrasp/occlusion.hpp"

namespace occgrasp {

/// One synthetic fruit observation.
struct Scene {
    std::uint64_t seed = 0;
    double alpha = 0.0;
    PointCloud full;      ///< unoccluded surface, also the sampler's ground shape
    PointCloud observed;  ///< occluded, cleaned and cropped
    LeafSpec leaf;
    std::size_t n_occluded = 0;  ///< points left by the leaf, before clutter and cleaning
    double removed_fraction = 0.0;
    double centroid_shift = 0.0;         ///< relative to the bounding-box diagonal
    double centroid_shift_radius = 0.0;  ///< relative to the fruit's max radius
};

Scene make_scene(const ExperimentConfig& cfg, std::uint64_t seed, double alpha);

/// Seed of trial `trial`; shared by every mode and alpha so rows are paired.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial);

struct SweepRow {
    Mode mode = Mode::Baseline;
    std::size_t alpha_index = 0;
    double alpha = 0.0;
    std::size_t trial = 0;
    std::size_t group = 0;  ///< trial / fruits_per_trial
    std::uint64_t seed = 0;
    std::size_t n_full = 0;
    std::size_t n_observed = 0;
    double removed_fraction = 0.0;
    double centroid_shift = 0.0;
    DecisionReport report;
};

struct AggregateRow {
    Mode mode = Mode::Baseline;
    double alpha = 0.0;
    std::size_t n = 0;
    std::size_t attempts = 0;
    double attempt_rate = 0.0;
    std::map<std::string, std::size_t> reasons;
    double mean_global_uncertainty = 0.0;  ///< NaN when no row carries one
    double mean_removed_fraction = 0.0;
    double mean_centroid_shift = 0.0;
    std::vector<std::size_t> group_attempts;  ///< attempts per trial group
};

struct OcclusionRow {
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::size_t n_full = 0;
    std::size_t n_occluded = 0;
    double removed_fraction = 0.0;
    double centroid_shift = 0.0;
    double centroid_shift_radius = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;  ///< sorted by (mode, alpha, trial)
    std::vector<AggregateRow> aggregates;
    std::vector<OcclusionRow> occlusion;
    std::map<std::string, double> timing;  ///< seconds per stage
};

/// Worker count: cfg.threads, else OCCGRASP_THREADS, else hardware concurrency.
std::size_t resolve_threads(std::size_t configured);

SweepReport run_sweep(const ExperimentConfig& cfg);

std::vector<AggregateRow> aggregate(const std::vector<SweepRow>& rows, const ExperimentConfig& cfg);

/// Writes results.csv, decisions.json, aggregate.csv, aggregate.json,
/// occlusion.csv and timing.json. Only timing.json varies between runs.
void write_sweep(const SweepReport& report, const ExperimentConfig& cfg, const std::filesystem::path& dir);

std::string results_csv(const std::vector<SweepRow>& rows);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string occlusion_csv(const std::vector<OcclusionRow>& rows);

struct BenchResult {
    nlohmann::json table;  ///< per-stage medians and the jaw filter comparison
    bool verdicts_identical = true;
    double jaw_speedup = 0.0;  ///< naive / indexed median, 0 if undefined
};

BenchResult run_bench(const ExperimentConfig& cfg);

/// Naive vs indexed jaw check on a cloud of `n_points`. Exposed for tests.
BenchResult bench_jaw(const ExperimentConfig& cfg, std::size_t n_points);

}  // namespace occgrasp
