#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "occgrasp/completion.hpp"
#include "occgrasp/filter.hpp"
#include "occgrasp/grasp.hpp"
#include "occgrasp/quality.hpp"

namespace occgrasp {

struct EpsilonStats {
    std::vector<double> eps;
    double mean = 0.0;
    double std = 0.0;  ///< K-1 denominator
    double z = 0.0;
    double lcb = 0.0;
};

/// Occlusion-scheduled confidence factor: 0.75 + 1.325 * alpha, with the
/// tabulated values 0.75/0.88/1.02/1.15/1.28 returned exactly at
/// alpha = 0, 0.1, 0.2, 0.3, 0.4.
double z_schedule(double alpha);

/// mean, std (K-1) and lcb = mean - z * std. Throws BadEnsembleSize for K < 2.
EpsilonStats lcb_stats(std::span<const double> eps, double z);

enum class Mode { Baseline, NoDropout, Dropout };
enum class AbstainReason { GlobalUncertainty, NoSurvivingGrasps, NonPositiveLCB, NoDetection };
enum class Verdict { Attempt, Abstain };

const char* to_string(Mode m);
const char* to_string(AbstainReason r);
const char* to_string(Verdict v);
/// Throws ConfigError for unknown names.
Mode parse_mode(const std::string& s);

/// Decision pipeline parameters shared by every mode.
struct PipelineConfig {
    FilterConfig filter;
    GraspGenConfig generator;
    QualityConfig quality;
    SamplerConfig sampler;
    std::size_t K = 20;
    /// Jaw clearance against the per-sample completion (default) or against
    /// the partial observation.
    bool jaw_check_partial = false;
    /// Report the selected grasp at the mean-completion centroid (minus the
    /// standoff along its approach), keeping its orientation.
    bool center_at_centroid = false;

    /// Throws ConfigError.
    void validate() const;
};

struct ObjectInput {
    std::string id = "object";
    PointCloud partial;      ///< cleaned, cropped observation
    PointCloud shape;        ///< canonical shape the built-in sampler perturbs
    std::optional<CompletionEnsemble> ensemble;  ///< external completions (Dropout mode)
    double alpha = 0.0;      ///< occlusion level, drives z_schedule
};

struct SampleRecord {
    std::size_t k = 0;
    std::size_t M = 0;
    std::size_t M_prime = 0;
    double eps = 0.0;
};

struct DecisionReport {
    std::string object_id;
    Mode mode = Mode::Baseline;
    double alpha = 0.0;
    std::optional<double> global_uncertainty;
    std::vector<SampleRecord> per_sample;
    std::optional<EpsilonStats> stats;
    Verdict verdict = Verdict::Abstain;
    std::optional<AbstainReason> reason;
    std::optional<GraspPose> selected_grasp;
    std::string error;                 ///< component error that forced an abstention
    std::size_t generation_calls = 0;  ///< number of generate_grasps invocations

    /// Verdict/reason coupling and the EpsilonStats identities.
    bool consistent() const;
};

/// One object through Baseline, NoDropout or Dropout. Component errors turn
/// into an abstention with the error recorded.
DecisionReport decide(const ObjectInput& object, Mode mode, const PipelineConfig& cfg, std::uint64_t seed);

nlohmann::json to_json(const GraspPose& g);
nlohmann::json to_json(const DecisionReport& r);

}  // namespace occgrasp
