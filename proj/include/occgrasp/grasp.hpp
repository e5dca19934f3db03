#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "occgrasp/geom.hpp"

namespace occgrasp {

/// Parallel-jaw grasp frame. Rotation columns: x = jaw opening axis, y = minor
/// axis, z = approach direction. `center` is the standoff point; jaws sweep
/// from it along the approach.
struct GraspPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 center = Vec3::Zero();
    double score = 0.0;

    Vec3 jaw_axis() const { return rotation.col(0); }
    Vec3 minor_axis() const { return rotation.col(1); }
    Vec3 approach() const { return rotation.col(2); }

    /// Right-handed orthonormal rotation within `tol` and score in [0, 1].
    bool is_valid(double tol = 1e-9) const;
};

struct GraspGenConfig {
    std::size_t max_grasps = 200;         ///< M
    double max_width = 0.04;              ///< longest allowed contact chord (m)
    double mu = 0.5;                      ///< friction coefficient for the antipodal test
    double standoff = 0.04;               ///< centre offset back along the approach (m)
    Vec3 front = Vec3(0.0, 0.0, -1.0);    ///< preferred approach direction
    std::size_t attempts_per_grasp = 50;  ///< rejection-sampling budget factor
};

/// Frame from a jaw axis and a preferred approach: the approach is the unit
/// vector orthogonal to `jaw_axis` closest to `front` (any orthogonal
/// direction, chosen deterministically, if `front` is parallel to it).
Mat3 grasp_frame(const Vec3& jaw_axis, const Vec3& front);

/// Antipodal heuristic: sample point pairs (p, q), keep those within
/// `max_width` whose normals oppose within arctan(mu) of the chord, and return
/// the best `max_grasps` by score (ties by generation order).
/// Throws MissingNormals.
std::vector<GraspPose> generate_grasps(const PointCloud& cloud, const GraspGenConfig& cfg,
                                       std::uint64_t seed);

/// Rigid transform of a grasp (rotation applied to the frame and centre).
GraspPose transform(const GraspPose& g, const Mat3& rotation, const Vec3& translation);

/// Header row plus one line per grasp: r00..r22 row-major, cx cy cz, score.
void write_grasps_csv(std::ostream& out, std::span<const GraspPose> grasps);
std::vector<GraspPose> read_grasps_csv(std::istream& in);

}  // namespace occgrasp
