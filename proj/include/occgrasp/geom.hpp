#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace occgrasp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Ordered 3D points in metres with optional per-point unit normals.
/// `normals` is either empty or exactly as long as `points`.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
    bool has_normals() const noexcept { return !points.empty() && normals.size() == points.size(); }
};

struct Aabb {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    Vec3 center() const { return 0.5 * (min + max); }
    Vec3 extent() const { return max - min; }
    double diagonal() const { return extent().norm(); }
    Aabb padded(double pad) const { return {min.array() - pad, max.array() + pad}; }
    bool contains(const Vec3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
};

/// Throws EmptyCloud.
Aabb bounding_box(const PointCloud& cloud);

/// Drops non-finite points, then points whose deviation from the per-axis
/// median exceeds three per-axis (population) standard deviations on any axis.
/// Order and normals are preserved for the surviving points.
PointCloud clean(const PointCloud& cloud);

/// Throws EmptyCloud.
Vec3 centroid(const PointCloud& cloud);

/// PCA normals from the k nearest neighbours (k >= 3), oriented away from the
/// cloud centroid. Throws TooFewPoints when k < 3 or k > cloud size.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k);

/// Indices of the k nearest points, closest first, ties broken by lower index.
/// Builds a KD-tree per call; hold a KdTree for repeated queries.
std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k);

/// Points (and normals) inside the box.
PointCloud crop(const PointCloud& cloud, const Aabb& box);

/// Mean distance from each point to its nearest other point; 0 for < 2 points.
double mean_nn_spacing(const PointCloud& cloud);

/// Largest distance from `origin` to any point; 0 for an empty cloud.
double max_radius(const PointCloud& cloud, const Vec3& origin);

}  // namespace occgrasp
