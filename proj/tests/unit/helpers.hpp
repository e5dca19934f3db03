#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "occgrasp/geom.hpp"
#include "occgrasp/grasp.hpp"
#include "occgrasp/random.hpp"

namespace testutil {

using occgrasp::Mat3;
using occgrasp::PointCloud;
using occgrasp::Rng;
using occgrasp::Vec3;

inline Vec3 random_unit(Rng& rng) {
    Vec3 v;
    do {
        v = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (v.norm() < 1e-12);
    return v.normalized();
}

/// Uniform samples of a sphere surface with exact outward normals.
inline PointCloud sphere(std::uint64_t seed, std::size_t n, double radius, const Vec3& center = Vec3::Zero()) {
    Rng rng(seed);
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 u = random_unit(rng);
        c.points.push_back(center + radius * u);
        c.normals.push_back(u);
    }
    return c;
}

inline PointCloud uniform_box(std::uint64_t seed, std::size_t n, const Vec3& lo, const Vec3& hi) {
    Rng rng(seed);
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i)
        c.points.emplace_back(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), rng.uniform(lo.z(), hi.z()));
    return c;
}

inline Mat3 random_rotation(Rng& rng) {
    const Vec3 a = random_unit(rng);
    Vec3 b = random_unit(rng);
    b = (b - b.dot(a) * a).normalized();
    Mat3 r;
    r.col(0) = a;
    r.col(1) = b;
    r.col(2) = a.cross(b);
    return r;
}

/// Grasp with the given jaw axis and approach (made orthogonal).
inline occgrasp::GraspPose pose(const Vec3& jaw, const Vec3& approach, const Vec3& center, double score = 1.0) {
    occgrasp::GraspPose g;
    const Vec3 x = jaw.normalized();
    const Vec3 z = (approach - approach.dot(x) * x).normalized();
    g.rotation.col(0) = x;
    g.rotation.col(1) = z.cross(x);
    g.rotation.col(2) = z;
    g.center = center;
    g.score = score;
    return g;
}

}  // namespace testutil
