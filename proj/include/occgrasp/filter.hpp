#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "occgrasp/completion.hpp"
#include "occgrasp/geom.hpp"
#include "occgrasp/grasp.hpp"

namespace occgrasp {

struct FilterConfig {
    double theta_dot = 0.7;
    double theta_vert = 0.5;
    double tau = 0.005;  ///< jaw clearance (m)
    double jaw_width = 0.04;
    double jaw_len_min = 0.0;
    double jaw_len_max = 0.2;
    double delta_global = 0.01;
    double delta_local = 0.01;
    Vec3 front = Vec3(0.0, 0.0, -1.0);
    Vec3 world_up = Vec3(0.0, 0.0, 1.0);

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

enum class FilterStage { Pass, LocalUncertainty, Front, Vertical, JawIntersection };

const char* to_string(FilterStage stage);

struct GraspTrace {
    std::size_t index = 0;
    FilterStage stage = FilterStage::Pass;
    double local_uncertainty = 0.0;  ///< NaN when the stage was not evaluated
};

struct FilterTrace {
    bool global_gate_passed = true;
    std::vector<GraspTrace> grasps;
    std::size_t exact_distance_evaluations = 0;
    std::size_t prefilter_short_circuits = 0;  ///< grasps cleared without any exact distance
};

/// True when the object passes; abstain iff global uncertainty > delta_global.
bool global_gate(const CompletionEnsemble& ens, const FilterConfig& cfg);
bool global_gate(double global_uncertainty, const FilterConfig& cfg);

/// approach . front >= theta_dot
bool front_filter(const GraspPose& g, const FilterConfig& cfg);

/// Passes unless |jaw_axis . world_up| > theta_vert.
bool vertical_filter(const GraspPose& g, const FilterConfig& cfg);

/// Jaw segment at lateral offset `side` * w/2 along the jaw axis, spanning
/// the configured jaw length range along the approach.
struct Segment {
    Vec3 start, end;
};
Segment jaw_segment(const GraspPose& g, const FilterConfig& cfg, int side);

double point_segment_distance(const Vec3& p, const Segment& s);

struct JawCheckStats {
    std::size_t exact_evaluations = 0;
};

/// Reference clearance check: evaluates every point against both jaw segments
/// and passes iff the minimum distance exceeds tau.
bool jaw_intersection_naive(const GraspPose& g, const PointCloud& cloud, const FilterConfig& cfg);

/// Same verdict as the naive check. Points outside the tau-padded boxes of
/// both segments are skipped; survivors are evaluated exactly in a batch.
bool jaw_intersection_fast(const GraspPose& g, const PointCloud& cloud, const FilterConfig& cfg,
                           JawCheckStats* stats = nullptr);

/// Bounding-volume hierarchy over one cloud for checking many grasps against
/// it. Nodes are culled by padded-box overlap and a bounding-sphere distance
/// bound; leaf points go through the same box test and exact distance as
/// jaw_intersection_fast, so verdicts are identical.
class JawClearanceIndex {
public:
    explicit JawClearanceIndex(const PointCloud& cloud, std::size_t leaf_size = 16);

    bool passes(const GraspPose& g, const FilterConfig& cfg, JawCheckStats* stats = nullptr) const;
    std::size_t size() const noexcept { return points_.size(); }

private:
    struct Node {
        Aabb box;
        Vec3 center;
        double radius = 0.0;
        std::uint32_t begin = 0, end = 0;
        int left = -1, right = -1;
    };

    int build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size);
    bool segment_clear(const Segment& s, double tau, JawCheckStats* stats) const;

    std::vector<Vec3> points_;
    std::vector<Node> nodes_;
};

struct FilterResult {
    std::vector<GraspPose> survivors;
    std::vector<std::size_t> survivor_indices;
    FilterTrace trace;
};

/// Local uncertainty (only when `ens` is given), front, vertical, then jaw
/// clearance against `cloud`. Survivors keep input order.
FilterResult filter_pipeline(std::span<const GraspPose> grasps, const CompletionEnsemble* ens,
                             const PointCloud& cloud, const FilterConfig& cfg);

nlohmann::json to_json(const FilterTrace& trace);

}  // namespace occgrasp
