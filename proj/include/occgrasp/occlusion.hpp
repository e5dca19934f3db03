#pragma once

#include <cstdint>
#include <vector>

#include "occgrasp/geom.hpp"

namespace occgrasp {

/// Elliptical leaf occluder. {axis_major, axis_minor, normal} is a
/// right-handed orthonormal triad; the normal points into the object.
struct LeafSpec {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitX();
    Vec3 axis_major = Vec3::UnitY();
    Vec3 axis_minor = Vec3::UnitZ();
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double thickness = 0.0;
    double alpha = 0.0;
};

struct OcclusionOutcome {
    PointCloud occluded_cloud;
    double removed_fraction = 0.0;
    LeafSpec leaf;
    std::vector<std::size_t> removed_indices;
};

/// One of the four lateral faces of the bounding box.
enum class LeafSide { XPlus, XMinus, YPlus, YMinus };

struct LeafModel {
    double aspect = 0.6;      ///< minor/major ratio of the ellipse
    double thickness = 0.01;  ///< slab half-width along the normal (m)
};

/// Seeded surface sampling of the teardrop of revolution
/// r(h) = scale * sin(pi h) * (1 - 0.35 h), z = scale * h, h in [0, 1].
/// Points are area-uniform and carry analytic outward normals.
PointCloud generate_strawberry(std::uint64_t seed, std::size_t n_points, double scale);

/// Area-weighted centroid height of the teardrop surface for scale 1,
/// computed by quadrature over the profile; x and y components are zero.
double teardrop_surface_centroid_height();

/// Picks a lateral face uniformly from the seed and builds the leaf on it.
/// Throws EmptyCloud.
LeafSpec place_leaf(const PointCloud& cloud, double alpha, double aspect, double thickness,
                    std::uint64_t seed);

/// Deterministic placement on a given face; `place_leaf` delegates here.
LeafSpec place_leaf_on(const PointCloud& cloud, LeafSide side, double alpha, double aspect,
                       double thickness);

LeafSide sample_leaf_side(std::uint64_t seed);

/// Footprint-and-slab test. A degenerate ellipse (a or b == 0) occludes nothing.
bool leaf_occludes(const LeafSpec& leaf, const Vec3& p);

OcclusionOutcome apply_leaf(const PointCloud& cloud, const LeafSpec& leaf);

/// |centroid(full) - centroid(occluded)| / diagonal(Aabb(full)). Throws EmptyCloud.
double centroid_shift(const PointCloud& full, const PointCloud& occluded);

/// Same shift divided by the full cloud's max distance from its centroid.
double centroid_shift_radius(const PointCloud& full, const PointCloud& occluded);

}  // namespace occgrasp
