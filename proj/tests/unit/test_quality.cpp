#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <numeric>

#include <Eigen/LU>

#include "helpers.hpp"
#include "occgrasp/errors.hpp"
#include "occgrasp/hull.hpp"
#include "occgrasp/quality.hpp"

using namespace occgrasp;
using testutil::Rng;

namespace {

WrenchSet from_columns(std::vector<Wrench> cols) {
    WrenchSet w;
    w.columns = std::move(cols);
    return w;
}

WrenchSet cross_polytope() {
    std::vector<Wrench> cols;
    for (int i = 0; i < 6; ++i)
        for (double s : {1.0, -1.0}) cols.push_back(s * Wrench::Unit(i));
    return from_columns(cols);
}

// Enumerates every 6-subset, keeps supporting hyperplanes, returns the
// smallest offset if the origin is strictly inside; 0 otherwise.
double brute_margin(const std::vector<Wrench>& pts) {
    const int n = static_cast<int>(pts.size());
    std::vector<int> idx(6);
    std::iota(idx.begin(), idx.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    while (true) {
        Eigen::Matrix<double, 5, 6> e;
        for (int r = 0; r < 5; ++r) e.row(r) = (pts[idx[r + 1]] - pts[idx[0]]).transpose();
        Eigen::FullPivLU<Eigen::Matrix<double, 5, 6>> lu(e);
        if (lu.rank() == 5) {
            Wrench nrm = lu.kernel().col(0).normalized();
            double off = nrm.dot(pts[idx[0]]);
            double lo = 1e300, hi = -1e300;
            for (const Wrench& p : pts) {
                lo = std::min(lo, nrm.dot(p) - off);
                hi = std::max(hi, nrm.dot(p) - off);
            }
            if (hi <= 1e-12 || lo >= -1e-12) {
                if (lo >= -1e-12) {
                    nrm = -nrm;
                    off = -off;
                }
                any = true;
                best = std::min(best, off);
            }
        }
        int k = 5;
        while (k >= 0 && idx[k] == n - 6 + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < 6; ++j) idx[j] = idx[j - 1] + 1;
    }
    return any && best > 0 ? best : 0.0;
}

std::vector<Wrench> random_ball_points(Rng& rng, int n, const Wrench& shift) {
    std::vector<Wrench> out;
    for (int i = 0; i < n; ++i) {
        Wrench w;
        for (int d = 0; d < 6; ++d) w[d] = rng.normal();
        out.push_back(w + shift);
    }
    return out;
}

GraspPose frame(const Vec3& x, const Vec3& y, const Vec3& a, const Vec3& c) {
    GraspPose g;
    g.rotation.col(0) = x;
    g.rotation.col(1) = y;
    g.rotation.col(2) = a;
    g.center = c;
    return g;
}

}  // namespace

TEST_CASE("cross-polytope and one-sided sets") {
    const EpsilonResult r = epsilon_hull(cross_polytope());
    CHECK(r.origin_interior);
    CHECK(r.epsilon == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(r.facet_count == 64);

    std::vector<Wrench> half;
    for (int i = 0; i < 6; ++i) half.push_back(Wrench::Unit(i));
    half.push_back(Wrench::Constant(1.0));
    CHECK(epsilon_hull(from_columns(half)).epsilon == 0.0);
    CHECK(epsilon_hull(from_columns({})).epsilon == 0.0);
    CHECK(epsilon_sampled(from_columns({}), 100, 1) == 0.0);

    // Origin on a facet: not strictly interior.
    std::vector<Wrench> touching = cross_polytope().columns;
    for (Wrench& w : touching) w += Wrench::Constant(1.0 / 6.0);
    CHECK(epsilon_hull(from_columns(touching)).epsilon == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hull margin matches brute-force facet enumeration") {
    Rng rng(71);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 8 + rng.below(6);
        Wrench shift;
        for (int d = 0; d < 6; ++d) shift[d] = 0.3 * rng.normal();
        const auto pts = random_ball_points(rng, n, shift);
        const double expected = brute_margin(pts);
        const auto lazy = hull::IncrementalHull<6>::origin_margin(pts);
        const auto full = hull::IncrementalHull<6>::full(pts);
        CHECK(lazy.margin == doctest::Approx(expected).epsilon(1e-9));
        CHECK(full.margin == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("lazy and full hull agree on large sets") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Wrench shift;
        for (int d = 0; d < 6; ++d) shift[d] = 0.2 * rng.normal();
        const auto pts = random_ball_points(rng, 300, shift);
        const auto lazy = hull::IncrementalHull<6>::origin_margin(pts);
        const auto full = hull::IncrementalHull<6>::full(pts);
        CHECK(lazy.margin == doctest::Approx(full.margin).epsilon(1e-9));
        CHECK(lazy.facet_count <= full.facet_count);
    }
}

TEST_CASE("hull invariances") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        auto pts = random_ball_points(rng, 40, Wrench::Zero());
        const double base = epsilon_hull(from_columns(pts)).epsilon;
        REQUIRE(base > 0.0);

        auto perm = pts;
        for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        CHECK(epsilon_hull(from_columns(perm)).epsilon == doctest::Approx(base).epsilon(1e-10));

        auto dup = pts;
        dup.insert(dup.end(), pts.begin(), pts.begin() + 10);
        CHECK(epsilon_hull(from_columns(dup)).epsilon == doctest::Approx(base).epsilon(1e-10));

        const double s = rng.uniform(0.1, 10.0);
        auto scaled = pts;
        for (Wrench& w : scaled) w *= s;
        CHECK(epsilon_hull(from_columns(scaled)).epsilon == doctest::Approx(s * base).epsilon(1e-10));

        auto more = pts;
        const auto extra = random_ball_points(rng, 10, Wrench::Zero());
        more.insert(more.end(), extra.begin(), extra.end());
        CHECK(epsilon_hull(from_columns(more)).epsilon >= base - 1e-12);

        // Orthogonal maps preserve the margin.
        const Eigen::Matrix<double, 6, 6> q =
            Eigen::HouseholderQR<Eigen::Matrix<double, 6, 6>>(Eigen::Matrix<double, 6, 6>::Random()).householderQ();
        auto rotated = pts;
        for (Wrench& w : rotated) w = q * w;
        CHECK(epsilon_hull(from_columns(rotated)).epsilon == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("sampled estimate bounds the hull margin from above") {
    Rng rng(30);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = random_ball_points(rng, 60, Wrench::Zero());
        const WrenchSet w = from_columns(pts);
        const double exact = epsilon_hull(w).epsilon;
        const double coarse = epsilon_sampled(w, 2000, trial);
        const double fine = epsilon_sampled(w, 20000, trial);
        CHECK(coarse >= exact - 1e-6);
        CHECK(fine >= exact - 1e-6);
        CHECK(fine <= coarse + 1e-12);  // same stream prefix
    }
    const double cp = epsilon_sampled(cross_polytope(), 20000, 3);
    CHECK(cp >= 1.0 / std::sqrt(6.0) - 1e-12);
    CHECK(cp < 1.0 / std::sqrt(6.0) + 0.15);
}

TEST_CASE("friction cone geometry") {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 n = testutil::random_unit(rng);
        const double mu = rng.uniform(0.1, 1.5);
        const std::size_t k = 3 + rng.below(14);
        const auto edges = friction_cone(n, mu, k);
        REQUIRE(edges.size() == k);
        Vec3 sum = Vec3::Zero();
        for (const Vec3& e : edges) {
            CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::acos(std::clamp(e.dot(n), -1.0, 1.0)) == doctest::Approx(std::atan(mu)).epsilon(1e-9));
            sum += e;
        }
        // Equal azimuth spacing: the edges sum along the axis.
        CHECK((sum - sum.dot(n) * n).norm() < 1e-12);
        for (std::size_t i = 0; i < k; ++i) {
            const Vec3 a = edges[i] - edges[i].dot(n) * n, b = edges[(i + 1) % k] - edges[(i + 1) % k].dot(n) * n;
            CHECK(std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) ==
                  doctest::Approx(2.0 * std::numbers::pi / double(k)).epsilon(1e-9));
        }
        // Rotating the normal gives a congruent edge set.
        const auto rotated = friction_cone(testutil::random_rotation(rng) * n, mu, k);
        std::vector<double> g0, g1;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                g0.push_back(edges[i].dot(edges[j]));
                g1.push_back(rotated[i].dot(rotated[j]));
            }
        std::sort(g0.begin(), g0.end());
        std::sort(g1.begin(), g1.end());
        for (std::size_t i = 0; i < g0.size(); ++i) CHECK(g0[i] == doctest::Approx(g1[i]).epsilon(1e-9));
    }
    for (const Vec3& e : friction_cone(Vec3::UnitZ(), 0.0, 6)) CHECK((e - Vec3::UnitZ()).norm() < 1e-15);
}

TEST_CASE("wrench columns") {
    ContactPair cp;
    cp.left = Vec3(-0.01, 0, 0);
    cp.right = Vec3(0.01, 0, 0);
    cp.normal_left = Vec3(1, 0, 0);
    cp.normal_right = Vec3(-1, 0, 0);
    const WrenchSet w = wrench_matrix(cp, 0.5, 8, 0.02);
    REQUIRE(w.columns.size() == 16);
    const auto cone = friction_cone(cp.normal_left, 0.5, 8);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK((w.columns[j].head<3>() - cone[j]).norm() < 1e-15);
        CHECK((w.columns[j].tail<3>() - cp.left.cross(cone[j]) / 0.02).norm() < 1e-12);
    }
    // Two point contacts never span 6D: torque about the contact line is missing.
    CHECK(epsilon_hull(w).epsilon == 0.0);
    const std::vector<ContactPair> two{cp, cp};
    CHECK(wrench_matrix(std::span<const ContactPair>(two), 0.5, 8, 0.02).columns.size() == 32);
}

TEST_CASE("pooled contacts around a sphere give positive margin") {
    std::vector<ContactPair> pairs;
    for (int i = 0; i < 3; ++i) {
        const Vec3 x = Vec3::Unit(i);
        ContactPair cp;
        cp.left = -0.015 * x;
        cp.right = 0.015 * x;
        cp.normal_left = x;
        cp.normal_right = -x;
        pairs.push_back(cp);
    }
    const double union_eps = epsilon_hull(wrench_matrix(std::span<const ContactPair>(pairs), 0.5, 8, 0.015)).epsilon;
    CHECK(union_eps > 0.0);
    for (const ContactPair& cp : pairs) CHECK(union_eps >= epsilon_hull(wrench_matrix(cp, 0.5, 8, 0.015)).epsilon);
    CHECK(epsilon_hull(wrench_matrix(std::span<const ContactPair>(pairs), 0.8, 8, 0.015)).epsilon >= union_eps);
}

TEST_CASE("contacts on a sphere") {
    FilterConfig cfg;
    const Vec3 centre(0.001, -0.002, 0.003);
    const PointCloud sphere = testutil::sphere(4, 30000, 0.015, centre);
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat3 r = testutil::random_rotation(rng);
        const GraspPose g = frame(r.col(0), r.col(1), r.col(2), centre - 0.05 * r.col(2));
        const ContactPair cp = estimate_contacts(g, sphere, cfg);
        const Vec3 origin = centroid(sphere);
        const Vec3 expect_l = centre - 0.015 * g.jaw_axis() - origin, expect_r = centre + 0.015 * g.jaw_axis() - origin;
        CHECK((cp.left - expect_l).norm() < 0.002);
        CHECK((cp.right - expect_r).norm() < 0.002);
        CHECK(cp.normal_left.dot(g.jaw_axis()) > 0.9);
        CHECK(cp.normal_right.dot(g.jaw_axis()) < -0.9);

        ContactConfig fine;
        fine.step = 0.0005;
        const ContactPair cf = estimate_contacts(g, sphere, cfg, fine);
        CHECK((cf.left - cp.left).norm() < 0.002);
        CHECK((cf.right - cp.right).norm() < 0.002);
    }
}

TEST_CASE("contact errors") {
    FilterConfig cfg;
    const PointCloud sphere = testutil::sphere(4, 2000, 0.015);
    const GraspPose away = frame(Vec3::UnitX(), -Vec3::UnitY(), Vec3::UnitZ(), Vec3(1, 1, 1));
    auto code = [&](const GraspPose& g, const PointCloud& c) {
        try {
            estimate_contacts(g, c, cfg);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::ConfigError;
    };
    CHECK(code(away, sphere) == ErrorCode::NoContact);
    CHECK(code(away, PointCloud{}) == ErrorCode::NoContact);
    PointCloud bare;
    bare.points = sphere.points;
    CHECK(code(away, bare) == ErrorCode::MissingNormals);
}

TEST_CASE("sample epsilon") {
    FilterConfig cfg;
    QualityConfig q;
    const PointCloud sphere = testutil::sphere(9, 8000, 0.015);
    CHECK(sample_epsilon({}, sphere, cfg, q).epsilon == 0.0);

    std::vector<GraspPose> grasps;
    Rng rng(10);
    for (int i = 0; i < 6; ++i) {
        const Mat3 r = testutil::random_rotation(rng);
        grasps.push_back(frame(r.col(0), r.col(1), r.col(2), -0.05 * r.col(2)));
    }
    const SampleEpsilon u = sample_epsilon(grasps, sphere, cfg, q);
    QualityConfig best = q;
    best.mode = EpsilonMode::BestSingle;
    const SampleEpsilon b = sample_epsilon(grasps, sphere, cfg, best);
    CHECK(u.contacts_found == 6);
    CHECK(u.epsilon > 0.0);
    CHECK(u.epsilon >= b.epsilon);
    CHECK(u.epsilon <= 1.0);

    // Grasps that miss the object contribute nothing.
    std::vector<GraspPose> missing{frame(Vec3::UnitX(), -Vec3::UnitY(), Vec3::UnitZ(), Vec3(1, 1, 1))};
    const SampleEpsilon m = sample_epsilon(missing, sphere, cfg, q);
    CHECK(m.contacts_found == 0);
    CHECK(m.epsilon == 0.0);
    const auto j = to_json(u.hull);
    CHECK(j["epsilon"] == u.epsilon);
    CHECK(j["n_dir"] == 8);
}
