#include "occgrasp/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "occgrasp/errors.hpp"
#include "occgrasp/hull.hpp"
#include "occgrasp/random.hpp"

namespace occgrasp {

namespace {

ContactPair contacts_with_radius(const GraspPose& g, const PointCloud& cloud, const FilterConfig& cfg,
                                 double step, double radius, const Vec3& origin) {
    if (!cloud.has_normals()) throw Error(ErrorCode::MissingNormals, "estimate_contacts needs normals");
    if (!(step > 0.0)) throw Error(ErrorCode::ConfigError, "march step must be > 0");
    const Vec3 x = g.jaw_axis(), y = g.minor_axis(), a = g.approach();
    const double half = 0.5 * cfg.jaw_width;
    const double span = cfg.jaw_len_max - cfg.jaw_len_min;
    const std::size_t n_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / step)));

    // Extreme corridor points of every depth slice the tips pass through.
    struct Slice {
        int lo = -1, hi = -1;
        double lo_u = 0.0, hi_u = 0.0;
    };
    std::vector<Slice> slices(n_steps);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 r = cloud.points[i] - g.center;
        const double u = r.dot(x), v = r.dot(y), d = r.dot(a);
        if (std::abs(v) > radius || std::abs(u) > half || d < cfg.jaw_len_min || d > cfg.jaw_len_max) continue;
        const std::size_t k = std::min(n_steps - 1, static_cast<std::size_t>((d - cfg.jaw_len_min) / step));
        Slice& s = slices[k];
        if (s.lo < 0 || u < s.lo_u) { s.lo = static_cast<int>(i); s.lo_u = u; }
        if (s.hi < 0 || u > s.hi_u) { s.hi = static_cast<int>(i); s.hi_u = u; }
    }

    int best = -1;
    double best_width = 0.0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const Slice& s = slices[k];
        if (s.lo < 0) continue;
        const double width = s.hi_u - s.lo_u;
        if (width > best_width) {
            best_width = width;
            best = static_cast<int>(k);
        }
    }
    if (best < 0) throw Error(ErrorCode::NoContact, "jaw tips never reached the surface");

    const Slice& s = slices[best];
    ContactPair c;
    c.left = cloud.points[s.lo] - origin;
    c.right = cloud.points[s.hi] - origin;
    c.normal_left = cloud.normals[s.lo].normalized();
    c.normal_right = cloud.normals[s.hi].normalized();
    if (c.normal_left.dot(x) < 0.0) c.normal_left = -c.normal_left;
    if (c.normal_right.dot(x) > 0.0) c.normal_right = -c.normal_right;
    return c;
}

double default_radius(const PointCloud& cloud, const ContactConfig& contact) {
    return contact.contact_radius > 0.0 ? contact.contact_radius : 2.0 * mean_nn_spacing(cloud);
}

}  // namespace

ContactPair estimate_contacts(const GraspPose& g, const PointCloud& cloud, const FilterConfig& cfg,
                              const ContactConfig& contact) {
    if (cloud.empty()) throw Error(ErrorCode::NoContact, "empty cloud");
    return contacts_with_radius(g, cloud, cfg, contact.step, default_radius(cloud, contact), centroid(cloud));
}

std::vector<Vec3> friction_cone(const Vec3& n, double mu, std::size_t n_dir) {
    const Vec3 axis = n.normalized();
    int least = 0;
    axis.cwiseAbs().minCoeff(&least);
    const Vec3 t1 = Vec3::Unit(least).cross(axis).normalized();
    const Vec3 t2 = axis.cross(t1);
    std::vector<Vec3> out;
    out.reserve(n_dir);
    for (std::size_t k = 0; k < n_dir; ++k) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_dir);
        out.push_back((axis + mu * (std::cos(phi) * t1 + std::sin(phi) * t2)).normalized());
    }
    return out;
}

WrenchSet wrench_matrix(std::span<const ContactPair> contacts, double mu, std::size_t n_dir, double lambda) {
    WrenchSet w;
    w.lambda = lambda;
    w.n_dir = n_dir;
    w.columns.reserve(contacts.size() * 2 * n_dir);
    auto add = [&](const Vec3& c, const Vec3& n) {
        for (const Vec3& f : friction_cone(n, mu, n_dir)) {
            Wrench col;
            col.head<3>() = f;
            col.tail<3>() = c.cross(f) / lambda;
            w.columns.push_back(col);
        }
    };
    for (const ContactPair& cp : contacts) {
        add(cp.left, cp.normal_left);
        add(cp.right, cp.normal_right);
    }
    return w;
}

WrenchSet wrench_matrix(const ContactPair& contacts, double mu, std::size_t n_dir, double lambda) {
    return wrench_matrix(std::span<const ContactPair>(&contacts, 1), mu, n_dir, lambda);
}

EpsilonResult epsilon_hull(const WrenchSet& w) {
    const auto h = hull::IncrementalHull<6>::origin_margin(w.columns);
    EpsilonResult r;
    r.epsilon = h.origin_interior ? h.margin : 0.0;
    r.origin_interior = h.origin_interior;
    r.facet_count = h.facet_count;
    r.lambda = w.lambda;
    r.n_dir = w.n_dir;
    return r;
}

double epsilon_sampled(const WrenchSet& w, std::size_t n_samples, std::uint64_t seed) {
    if (w.columns.empty()) return 0.0;
    Rng rng(derive_seed({seed, 0xe95ULL}));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n_samples; ++s) {
        Wrench u;
        for (int i = 0; i < 6; ++i) u[i] = rng.normal();
        u.normalize();
        double support = -std::numeric_limits<double>::infinity();
        for (const Wrench& col : w.columns) support = std::max(support, u.dot(col));
        best = std::min(best, support);
    }
    return std::max(best, 0.0);
}

SampleEpsilon sample_epsilon(std::span<const GraspPose> survivors, const PointCloud& cloud,
                             const FilterConfig& filter, const QualityConfig& quality) {
    SampleEpsilon out;
    if (survivors.empty() || cloud.empty()) return out;
    const Vec3 origin = centroid(cloud);
    double lambda = max_radius(cloud, origin);
    if (!(lambda > 0.0)) lambda = 1.0;
    const double radius = default_radius(cloud, quality.contact);

    std::vector<ContactPair> contacts;
    for (const GraspPose& g : survivors) {
        try {
            contacts.push_back(contacts_with_radius(g, cloud, filter, quality.contact.step, radius, origin));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoContact) throw;
        }
    }
    out.contacts_found = contacts.size();
    if (contacts.empty()) return out;

    if (quality.mode == EpsilonMode::Union) {
        out.hull = epsilon_hull(wrench_matrix(contacts, quality.mu, quality.n_dir, lambda));
    } else {
        for (const ContactPair& cp : contacts) {
            const EpsilonResult r = epsilon_hull(wrench_matrix(cp, quality.mu, quality.n_dir, lambda));
            if (out.hull.n_dir == 0 || r.epsilon > out.hull.epsilon) out.hull = r;
        }
    }
    out.epsilon = out.hull.epsilon;
    return out;
}

nlohmann::json to_json(const EpsilonResult& r) {
    return {{"epsilon", r.epsilon},
            {"origin_interior", r.origin_interior},
            {"facet_count", r.facet_count},
            {"lambda", r.lambda},
            {"n_dir", r.n_dir}};
}

}  // namespace occgrasp
