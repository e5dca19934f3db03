#include "occgrasp/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "occgrasp/errors.hpp"
#include "occgrasp/random.hpp"

namespace occgrasp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTaper = 0.35;

double profile(double h) { return std::sin(kPi * h) * (1.0 - kTaper * h); }

double profile_slope(double h) {
    return kPi * std::cos(kPi * h) * (1.0 - kTaper * h) - kTaper * std::sin(kPi * h);
}

// Surface-area density of the profile parameter h (up to a constant).
double area_density(double h) {
    const double slope = profile_slope(h);
    return profile(h) * std::sqrt(1.0 + slope * slope);
}

double max_area_density() {
    double peak = 0.0;
    for (int i = 0; i <= 4000; ++i) peak = std::max(peak, area_density(i / 4000.0));
    return 1.05 * peak;
}

}  // namespace

PointCloud generate_strawberry(std::uint64_t seed, std::size_t n_points, double scale) {
    static const double density_bound = max_area_density();
    Rng rng(derive_seed({seed, 0x5742ULL}));
    PointCloud cloud;
    cloud.points.reserve(n_points);
    cloud.normals.reserve(n_points);
    while (cloud.size() < n_points) {
        const double h = rng.uniform();
        const double accept = rng.uniform() * density_bound;
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        if (accept > area_density(h)) continue;
        const double r = scale * profile(h);
        const double c = std::cos(phi), s = std::sin(phi);
        cloud.points.emplace_back(r * c, r * s, scale * h);
        cloud.normals.push_back(Vec3(c, s, -profile_slope(h)).normalized());
    }
    return cloud;
}

double teardrop_surface_centroid_height() {
    // Composite Simpson over h in [0, 1].
    constexpr int n = 4000;
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double h = static_cast<double>(i) / n;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        num += w * h * area_density(h);
        den += w * area_density(h);
    }
    return num / den;
}

LeafSide sample_leaf_side(std::uint64_t seed) {
    Rng rng(derive_seed({seed, 0x1eafULL}));
    const bool axis_y = rng.below(2) == 1;
    const bool negative = rng.below(2) == 1;
    if (axis_y) return negative ? LeafSide::YMinus : LeafSide::YPlus;
    return negative ? LeafSide::XMinus : LeafSide::XPlus;
}

LeafSpec place_leaf_on(const PointCloud& cloud, LeafSide side, double alpha, double aspect,
                       double thickness) {
    const Aabb box = bounding_box(cloud);
    const Vec3 c = box.center();
    LeafSpec leaf;
    switch (side) {
        case LeafSide::XPlus:
            leaf.center = {box.max.x(), c.y(), c.z()};
            leaf.normal = -Vec3::UnitX();
            break;
        case LeafSide::XMinus:
            leaf.center = {box.min.x(), c.y(), c.z()};
            leaf.normal = Vec3::UnitX();
            break;
        case LeafSide::YPlus:
            leaf.center = {c.x(), box.max.y(), c.z()};
            leaf.normal = -Vec3::UnitY();
            break;
        case LeafSide::YMinus:
            leaf.center = {c.x(), box.min.y(), c.z()};
            leaf.normal = Vec3::UnitY();
            break;
    }
    // Major axis horizontal along the face, minor axis vertical.
    leaf.axis_major = Vec3::UnitZ().cross(leaf.normal).normalized();
    leaf.axis_minor = leaf.normal.cross(leaf.axis_major);
    leaf.alpha = alpha;
    leaf.semi_major = alpha * box.diagonal();
    leaf.semi_minor = aspect * leaf.semi_major;
    leaf.thickness = thickness;
    return leaf;
}

LeafSpec place_leaf(const PointCloud& cloud, double alpha, double aspect, double thickness,
                    std::uint64_t seed) {
    if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "place_leaf on empty cloud");
    return place_leaf_on(cloud, sample_leaf_side(seed), alpha, aspect, thickness);
}

bool leaf_occludes(const LeafSpec& leaf, const Vec3& p) {
    if (!(leaf.semi_major > 0.0) || !(leaf.semi_minor > 0.0)) return false;
    const Vec3 r = p - leaf.center;
    const double u = r.dot(leaf.axis_major) / leaf.semi_major;
    const double v = r.dot(leaf.axis_minor) / leaf.semi_minor;
    const double d = r.dot(leaf.normal);
    return u * u + v * v <= 1.0 && std::abs(d) <= leaf.thickness;
}

OcclusionOutcome apply_leaf(const PointCloud& cloud, const LeafSpec& leaf) {
    OcclusionOutcome out;
    out.leaf = leaf;
    const bool normals = cloud.has_normals();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (leaf_occludes(leaf, cloud.points[i])) {
            out.removed_indices.push_back(i);
            continue;
        }
        out.occluded_cloud.points.push_back(cloud.points[i]);
        if (normals) out.occluded_cloud.normals.push_back(cloud.normals[i]);
    }
    if (!cloud.empty())
        out.removed_fraction =
            static_cast<double>(out.removed_indices.size()) / static_cast<double>(cloud.size());
    return out;
}

double centroid_shift(const PointCloud& full, const PointCloud& occluded) {
    const double diag = bounding_box(full).diagonal();
    const double shift = (centroid(full) - centroid(occluded)).norm();
    return diag > 0.0 ? shift / diag : 0.0;
}

double centroid_shift_radius(const PointCloud& full, const PointCloud& occluded) {
    const Vec3 c = centroid(full);
    const double radius = max_radius(full, c);
    const double shift = (c - centroid(occluded)).norm();
    return radius > 0.0 ? shift / radius : 0.0;
}

}  // namespace occgrasp
