#include "occgrasp/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "occgrasp/errors.hpp"

namespace occgrasp {

namespace {

// Culling slack (m). Culling tests only ever skip work for points that are
// provably farther than tau + slack, so rounding cannot flip a verdict.
constexpr double kCullSlack = 1e-9;

void require(bool ok, const char* field, const std::string& why) {
    if (!ok) throw Error(ErrorCode::ConfigError, std::string(field) + ": " + why);
}

Aabb segment_box(const Segment& s, double pad) {
    return Aabb{s.start.cwiseMin(s.end), s.start.cwiseMax(s.end)}.padded(pad);
}

bool overlaps(const Aabb& a, const Aabb& b) {
    return (a.min.array() <= b.max.array()).all() && (b.min.array() <= a.max.array()).all();
}

}  // namespace

void FilterConfig::validate() const {
    require(theta_dot >= -1.0 && theta_dot <= 1.0, "theta_dot", "must lie in [-1, 1]");
    require(theta_vert >= 0.0 && theta_vert <= 1.0, "theta_vert", "must lie in [0, 1]");
    require(tau > 0.0, "tau", "must be > 0");
    require(jaw_width > 0.0, "jaw_width", "must be > 0");
    require(jaw_len_min >= 0.0, "jaw_len_min", "must be >= 0");
    require(jaw_len_max >= jaw_len_min, "jaw_len_max", "must be >= jaw_len_min");
    require(delta_global >= 0.0, "delta_global", "must be >= 0");
    require(delta_local >= 0.0, "delta_local", "must be >= 0");
    require(std::abs(front.norm() - 1.0) <= 1e-6, "front", "must be a unit vector");
    require(std::abs(world_up.norm() - 1.0) <= 1e-6, "world_up", "must be a unit vector");
}

const char* to_string(FilterStage stage) {
    switch (stage) {
        case FilterStage::Pass: return "Pass";
        case FilterStage::LocalUncertainty: return "LocalUncertainty";
        case FilterStage::Front: return "Front";
        case FilterStage::Vertical: return "Vertical";
        case FilterStage::JawIntersection: return "JawIntersection";
    }
    return "Unknown";
}

bool global_gate(double global_uncertainty, const FilterConfig& cfg) {
    return !(global_uncertainty > cfg.delta_global);
}

bool global_gate(const CompletionEnsemble& ens, const FilterConfig& cfg) {
    return global_gate(global_uncertainty(ens), cfg);
}

bool front_filter(const GraspPose& g, const FilterConfig& cfg) {
    return g.approach().dot(cfg.front) >= cfg.theta_dot;
}

bool vertical_filter(const GraspPose& g, const FilterConfig& cfg) {
    return !(std::abs(g.jaw_axis().dot(cfg.world_up)) > cfg.theta_vert);
}

Segment jaw_segment(const GraspPose& g, const FilterConfig& cfg, int side) {
    const Vec3 base = g.center + (0.5 * cfg.jaw_width * side) * g.jaw_axis();
    return {base + cfg.jaw_len_min * g.approach(), base + cfg.jaw_len_max * g.approach()};
}

double point_segment_distance(const Vec3& p, const Segment& s) {
    const Vec3 d = s.end - s.start;
    const double len2 = d.squaredNorm();
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp((p - s.start).dot(d) / len2, 0.0, 1.0);
    return (p - (s.start + t * d)).norm();
}

bool jaw_intersection_naive(const GraspPose& g, const PointCloud& cloud, const FilterConfig& cfg) {
    const Segment left = jaw_segment(g, cfg, -1), right = jaw_segment(g, cfg, +1);
    double closest = std::numeric_limits<double>::infinity();
    for (const Vec3& p : cloud.points)
        closest = std::min({closest, point_segment_distance(p, left), point_segment_distance(p, right)});
    return closest > cfg.tau;
}

bool jaw_intersection_fast(const GraspPose& g, const PointCloud& cloud, const FilterConfig& cfg,
                           JawCheckStats* stats) {
    const Segment segs[2] = {jaw_segment(g, cfg, -1), jaw_segment(g, cfg, +1)};
    const Aabb boxes[2] = {segment_box(segs[0], cfg.tau + kCullSlack),
                           segment_box(segs[1], cfg.tau + kCullSlack)};

    // Pre-filter pass: collect candidates per jaw.
    std::vector<std::uint32_t> candidates[2];
    for (std::uint32_t i = 0; i < cloud.size(); ++i)
        for (int s = 0; s < 2; ++s)
            if (boxes[s].contains(cloud.points[i])) candidates[s].push_back(i);

    for (int s = 0; s < 2; ++s) {
        for (std::uint32_t i : candidates[s]) {
            if (stats) ++stats->exact_evaluations;
            if (point_segment_distance(cloud.points[i], segs[s]) <= cfg.tau) return false;
        }
    }
    return true;
}

JawClearanceIndex::JawClearanceIndex(const PointCloud& cloud, std::size_t leaf_size)
    : points_(cloud.points) {
    if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()), std::max<std::size_t>(leaf_size, 1));
}

int JawClearanceIndex::build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.begin = begin;
    node.end = end;
    node.box = {points_[begin], points_[begin]};
    for (std::uint32_t i = begin; i < end; ++i) {
        node.box.min = node.box.min.cwiseMin(points_[i]);
        node.box.max = node.box.max.cwiseMax(points_[i]);
    }
    node.center = node.box.center();
    for (std::uint32_t i = begin; i < end; ++i)
        node.radius = std::max(node.radius, (points_[i] - node.center).norm());

    if (end - begin > leaf_size && node.box.diagonal() > 0.0) {
        int axis = 0;
        node.box.extent().maxCoeff(&axis);
        const std::uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                         [axis](const Vec3& a, const Vec3& b) { return a[axis] < b[axis]; });
        node.left = build(begin, mid, leaf_size);
        node.right = build(mid, end, leaf_size);
    }
    nodes_[id] = node;
    return id;
}

bool JawClearanceIndex::segment_clear(const Segment& s, double tau, JawCheckStats* stats) const {
    if (nodes_.empty()) return true;
    const Aabb box = segment_box(s, tau + kCullSlack);
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (!overlaps(node.box, box)) continue;
        if (point_segment_distance(node.center, s) - node.radius > tau + kCullSlack) continue;
        if (node.left < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                if (!box.contains(points_[i])) continue;
                if (stats) ++stats->exact_evaluations;
                if (point_segment_distance(points_[i], s) <= tau) return false;
            }
            continue;
        }
        stack.push_back(node.right);
        stack.push_back(node.left);
    }
    return true;
}

bool JawClearanceIndex::passes(const GraspPose& g, const FilterConfig& cfg, JawCheckStats* stats) const {
    return segment_clear(jaw_segment(g, cfg, -1), cfg.tau, stats) &&
           segment_clear(jaw_segment(g, cfg, +1), cfg.tau, stats);
}

FilterResult filter_pipeline(std::span<const GraspPose> grasps, const CompletionEnsemble* ens,
                             const PointCloud& cloud, const FilterConfig& cfg) {
    FilterResult result;
    if (grasps.empty()) return result;
    const JawClearanceIndex index(cloud);
    const double jaw_len = cfg.jaw_len_max;

    for (std::size_t i = 0; i < grasps.size(); ++i) {
        const GraspPose& g = grasps[i];
        GraspTrace t{i, FilterStage::Pass, std::numeric_limits<double>::quiet_NaN()};
        if (ens) {
            t.local_uncertainty = local_uncertainty(*ens, g, cfg.jaw_width, jaw_len);
            if (!(t.local_uncertainty <= cfg.delta_local)) t.stage = FilterStage::LocalUncertainty;
        }
        if (t.stage == FilterStage::Pass && !front_filter(g, cfg)) t.stage = FilterStage::Front;
        if (t.stage == FilterStage::Pass && !vertical_filter(g, cfg)) t.stage = FilterStage::Vertical;
        if (t.stage == FilterStage::Pass) {
            JawCheckStats stats;
            const bool clear = index.passes(g, cfg, &stats);
            result.trace.exact_distance_evaluations += stats.exact_evaluations;
            if (stats.exact_evaluations == 0) ++result.trace.prefilter_short_circuits;
            if (!clear) t.stage = FilterStage::JawIntersection;
        }
        if (t.stage == FilterStage::Pass) {
            result.survivors.push_back(g);
            result.survivor_indices.push_back(i);
        }
        result.trace.grasps.push_back(t);
    }
    return result;
}

nlohmann::json to_json(const FilterTrace& trace) {
    nlohmann::json grasps = nlohmann::json::array();
    for (const auto& g : trace.grasps)
        grasps.push_back({{"index", g.index},
                          {"stage", to_string(g.stage)},
                          {"verdict", g.stage == FilterStage::Pass ? "pass" : "reject"}});
    return {{"global_gate_passed", trace.global_gate_passed},
            {"grasps", grasps},
            {"exact_distance_evaluations", trace.exact_distance_evaluations},
            {"prefilter_short_circuits", trace.prefilter_short_circuits}};
}

}  // namespace occgrasp
