#include "occgrasp/geom.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "occgrasp/errors.hpp"
#include "occgrasp/kdtree.hpp"

namespace occgrasp {

Aabb bounding_box(const PointCloud& cloud) {
    if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "bounding_box of empty cloud");
    Aabb box{cloud.points.front(), cloud.points.front()};
    for (const Vec3& p : cloud.points) {
        box.min = box.min.cwiseMin(p);
        box.max = box.max.cwiseMax(p);
    }
    return box;
}

namespace {

PointCloud select(const PointCloud& cloud, const std::vector<std::size_t>& keep) {
    PointCloud out;
    out.points.reserve(keep.size());
    const bool normals = cloud.has_normals();
    if (normals) out.normals.reserve(keep.size());
    for (std::size_t i : keep) {
        out.points.push_back(cloud.points[i]);
        if (normals) out.normals.push_back(cloud.normals[i]);
    }
    return out;
}

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    const double hi = v[n / 2];
    if (n % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + n / 2);
    return 0.5 * (lo + hi);
}

}  // namespace

PointCloud clean(const PointCloud& cloud) {
    std::vector<std::size_t> finite;
    finite.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.points[i].allFinite()) finite.push_back(i);
    if (finite.empty()) return {};

    const double n = static_cast<double>(finite.size());
    Vec3 med, sd;
    for (int axis = 0; axis < 3; ++axis) {
        std::vector<double> values;
        values.reserve(finite.size());
        double mean = 0.0;
        for (std::size_t i : finite) {
            values.push_back(cloud.points[i][axis]);
            mean += cloud.points[i][axis];
        }
        mean /= n;
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        sd[axis] = std::sqrt(var / n);  // population formula
        med[axis] = median(std::move(values));
    }

    std::vector<std::size_t> keep;
    keep.reserve(finite.size());
    for (std::size_t i : finite) {
        const Vec3 dev = (cloud.points[i] - med).cwiseAbs();
        if ((dev.array() <= 3.0 * sd.array()).all()) keep.push_back(i);
    }
    return select(cloud, keep);
}

Vec3 centroid(const PointCloud& cloud) {
    if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "centroid of empty cloud");
    Vec3 sum = Vec3::Zero();
    for (const Vec3& p : cloud.points) sum += p;
    return sum / static_cast<double>(cloud.size());
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k) {
    if (k < 3 || k > cloud.size())
        throw Error(ErrorCode::TooFewPoints, "estimate_normals needs 3 <= k <= " +
                                                 std::to_string(cloud.size()) + ", got k=" +
                                                 std::to_string(k));
    const KdTree tree(cloud.points);
    const Vec3 center = centroid(cloud);

    PointCloud out;
    out.points = cloud.points;
    out.normals.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nbrs = tree.knn(cloud.points[i], k);
        Vec3 mean = Vec3::Zero();
        for (std::size_t j : nbrs) mean += cloud.points[j];
        mean /= static_cast<double>(k);
        Mat3 cov = Mat3::Zero();
        for (std::size_t j : nbrs) {
            const Vec3 d = cloud.points[j] - mean;
            cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
        Vec3 n = solver.eigenvectors().col(0).normalized();  // eigenvalues ascending
        const Vec3 r = cloud.points[i] - center;
        const double side = n.dot(r);
        if (std::abs(side) <= 1e-12 * r.norm()) {
            // Point in the tangent plane through the centroid: fix the sign canonically.
            int axis = 0;
            n.cwiseAbs().maxCoeff(&axis);
            if (n[axis] < 0) n = -n;
        } else if (side < 0) {
            n = -n;
        }
        out.normals[i] = n;
    }
    return out;
}

std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k) {
    return KdTree(cloud.points).knn(query, k);
}

PointCloud crop(const PointCloud& cloud, const Aabb& box) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (box.contains(cloud.points[i])) keep.push_back(i);
    return select(cloud, keep);
}

double mean_nn_spacing(const PointCloud& cloud) {
    if (cloud.size() < 2) return 0.0;
    const KdTree tree(cloud.points);
    double sum = 0.0;
    for (const Vec3& p : cloud.points) {
        const auto nn = tree.knn(p, 2);
        sum += (cloud.points[nn[1]] - p).norm();
    }
    return sum / static_cast<double>(cloud.size());
}

double max_radius(const PointCloud& cloud, const Vec3& origin) {
    double r2 = 0.0;
    for (const Vec3& p : cloud.points) r2 = std::max(r2, (p - origin).squaredNorm());
    return std::sqrt(r2);
}

}  // namespace occgrasp
