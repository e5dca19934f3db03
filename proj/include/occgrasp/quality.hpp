#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "occgrasp/filter.hpp"
#include "occgrasp/geom.hpp"
#include "occgrasp/grasp.hpp"

namespace occgrasp {

using Wrench = Eigen::Matrix<double, 6, 1>;

/// Contact positions relative to the cloud centroid; normals point into the
/// object (toward the opposite jaw).
struct ContactPair {
    Vec3 left = Vec3::Zero();
    Vec3 right = Vec3::Zero();
    Vec3 normal_left = Vec3::UnitX();
    Vec3 normal_right = -Vec3::UnitX();
};

struct ContactConfig {
    double step = 0.001;          ///< marching increment along the approach (m)
    double contact_radius = 0.0;  ///< corridor half-width; <= 0 means 2x mean NN spacing
};

/// Steps the jaw tips along the approach through the jaw length range. At
/// each depth slice the points lying in the closing corridor between the
/// jaws are collected; the contacts are the extreme left/right corridor
/// points of the widest slice, i.e. where closing jaws first touch.
/// Throws MissingNormals, NoContact.
ContactPair estimate_contacts(const GraspPose& g, const PointCloud& cloud, const FilterConfig& cfg,
                              const ContactConfig& contact = {});

/// n_dir unit edge directions at angle arctan(mu) from n, equally spaced in azimuth.
std::vector<Vec3> friction_cone(const Vec3& n, double mu, std::size_t n_dir);

/// Columns [F; (c x F) / lambda]; first 3 entries force, last 3 torque.
struct WrenchSet {
    std::vector<Wrench> columns;
    double lambda = 1.0;
    std::size_t n_dir = 0;
};

WrenchSet wrench_matrix(const ContactPair& contacts, double mu, std::size_t n_dir, double lambda);
/// Pools the cone wrenches of several contact pairs into one set.
WrenchSet wrench_matrix(std::span<const ContactPair> contacts, double mu, std::size_t n_dir, double lambda);

struct EpsilonResult {
    double epsilon = 0.0;
    bool origin_interior = false;
    std::size_t facet_count = 0;
    double lambda = 1.0;
    std::size_t n_dir = 0;
};

/// Radius of the largest origin-centred ball inside the convex hull of the
/// wrench columns; 0 when the origin is on or outside the hull or the hull
/// has empty interior.
EpsilonResult epsilon_hull(const WrenchSet& w);

/// Independent estimate: min over `n_samples` seeded uniform unit 6-vectors u
/// of max_j u.w_j, floored at 0. Approaches epsilon from above.
double epsilon_sampled(const WrenchSet& w, std::size_t n_samples, std::uint64_t seed);

enum class EpsilonMode { Union, BestSingle };

struct QualityConfig {
    double mu = 0.5;
    std::size_t n_dir = 8;
    ContactConfig contact;
    EpsilonMode mode = EpsilonMode::Union;
};

struct SampleEpsilon {
    double epsilon = 0.0;
    std::size_t contacts_found = 0;
    EpsilonResult hull;
};

/// Per-sample quality: union mode pools the contacts of every surviving grasp
/// into one wrench set; best-single takes the max per-grasp epsilon. Torques
/// are taken about the cloud centroid and scaled by the max centroid
/// distance. Zero when there are no survivors or no contacts.
SampleEpsilon sample_epsilon(std::span<const GraspPose> survivors, const PointCloud& cloud,
                             const FilterConfig& filter, const QualityConfig& quality);

nlohmann::json to_json(const EpsilonResult& r);

}  // namespace occgrasp
