#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "helpers.hpp"
#include "occgrasp/errors.hpp"
#include "occgrasp/geom.hpp"
#include "occgrasp/io.hpp"
#include "occgrasp/kdtree.hpp"

using namespace occgrasp;
using testutil::Rng;

namespace {

std::vector<std::size_t> brute_knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k) {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double da = (pts[a] - q).squaredNorm(), db = (pts[b] - q).squaredNorm();
        return da < db || (da == db && a < b);
    });
    idx.resize(k);
    return idx;
}

// Filter written from the definition: finite, then per-axis |x - median| <= 3 sd (population).
std::vector<Vec3> reference_clean(const std::vector<Vec3>& in) {
    std::vector<Vec3> finite;
    for (const Vec3& p : in)
        if (std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z())) finite.push_back(p);
    if (finite.empty()) return {};
    double med[3], sd[3];
    for (int a = 0; a < 3; ++a) {
        std::vector<double> v;
        for (const Vec3& p : finite) v.push_back(p[a]);
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        med[a] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd[a] = std::sqrt(ss / n);
    }
    std::vector<Vec3> out;
    for (const Vec3& p : finite) {
        bool keep = true;
        for (int a = 0; a < 3; ++a) keep = keep && std::abs(p[a] - med[a]) <= 3.0 * sd[a];
        if (keep) out.push_back(p);
    }
    return out;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("occgrasp_test_" + name);
}

}  // namespace

TEST_CASE("clean drops non-finite points and 3-sigma outliers") {
    CHECK(clean(PointCloud{}).empty());

    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(std::numeric_limits<double>::quiet_NaN(), 0, 0)};
    const PointCloud out = clean(c);
    REQUIRE(out.size() == 1);
    CHECK(out.points[0] == Vec3(0, 0, 0));

    Rng rng(11);
    PointCloud g;
    for (int i = 0; i < 1000; ++i) g.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
    g.points.emplace_back(100.0, 0.0, 0.0);
    const PointCloud cleaned = clean(g);
    const auto expected = reference_clean(g.points);
    REQUIRE(cleaned.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(cleaned.points[i] == expected[i]);
    CHECK(std::none_of(cleaned.points.begin(), cleaned.points.end(), [](const Vec3& p) { return p.x() == 100.0; }));
}

TEST_CASE("clean keeps normals aligned and is idempotent on bounded clouds") {
    PointCloud c = testutil::sphere(5, 2000, 1.0);
    c.points.emplace_back(50.0, 0.0, 0.0);
    c.normals.push_back(Vec3::UnitX());
    c.points.emplace_back(std::numeric_limits<double>::infinity(), 0.0, 0.0);
    c.normals.push_back(Vec3::UnitX());
    const PointCloud once = clean(c);
    CHECK(once.size() == 2000);
    REQUIRE(once.has_normals());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(once.normals[i] == c.normals[i]);
    const PointCloud twice = clean(once);
    CHECK(twice.points == once.points);

    const PointCloud box = testutil::uniform_box(6, 3000, Vec3(-1, -2, 0), Vec3(1, 2, 5));
    CHECK(clean(clean(box)).points == clean(box).points);
}

TEST_CASE("centroid") {
    PointCloud c;
    c.points = {Vec3(1, 0, 0), Vec3(-1, 0, 0)};
    CHECK(centroid(c).norm() == 0.0);
    c.points = {Vec3(0.3, -2, 7)};
    CHECK(centroid(c) == Vec3(0.3, -2, 7));
    CHECK(centroid(testutil::sphere(19, 10000, 1.0)).norm() < 0.05);
    CHECK_THROWS_AS(centroid(PointCloud{}), Error);

    const PointCloud s = testutil::sphere(3, 500, 2.0);
    PointCloud shifted = s;
    const Vec3 v(0.5, -1.5, 3.0);
    for (Vec3& p : shifted.points) p += v;
    CHECK((centroid(shifted) - centroid(s) - v).norm() < 1e-12);
}

TEST_CASE("bounding box and crop") {
    CHECK_THROWS_AS(bounding_box(PointCloud{}), Error);
    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(1, 2, 3), Vec3(-1, 0.5, 1)};
    const Aabb b = bounding_box(c);
    CHECK(b.min == Vec3(-1, 0, 0));
    CHECK(b.max == Vec3(1, 2, 3));
    CHECK(b.diagonal() == doctest::Approx(std::sqrt(4.0 + 4.0 + 9.0)));
    const PointCloud cropped = crop(c, Aabb{Vec3(-0.5, -0.5, -0.5), Vec3(1, 2, 3)});
    REQUIRE(cropped.size() == 2);
    CHECK(cropped.points[1] == Vec3(1, 2, 3));
}

TEST_CASE("knn small cases") {
    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
    auto nn = knn(c, Vec3(1.4, 0, 0), 2);
    CHECK(nn == std::vector<std::size_t>{1, 2});
    CHECK(knn(c, Vec3(3, 0, 0), 1) == std::vector<std::size_t>{3});
    CHECK_THROWS_AS(knn(c, Vec3::Zero(), 5), Error);

    // Equidistant neighbours resolve to the lower index.
    PointCloud tie;
    tie.points = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0)};
    CHECK(knn(tie, Vec3::Zero(), 4) == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(knn(tie, Vec3(1, 0, 0), 2) == std::vector<std::size_t>{0, 3});
}

TEST_CASE("kd-tree agrees with a brute-force scan") {
    PointCloud c = testutil::uniform_box(21, 100000, Vec3(-1, -1, -1), Vec3(1, 1, 1));
    // Exact duplicates and a lattice stress the tie rule.
    for (int i = 0; i < 200; ++i) c.points.push_back(c.points[static_cast<std::size_t>(i) * 7]);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) c.points.emplace_back(0.1 * i, 0.1 * j, 0.0);
    const KdTree tree(c.points);
    Rng rng(22);
    for (int q = 0; q < 1000; ++q) {
        Vec3 query(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
        if (q % 10 == 0) query = c.points[rng.below(c.size())];
        if (q % 25 == 0) query = Vec3(0.1 * rng.below(5) + 0.05, 0.1 * rng.below(5), 0.0);
        const std::size_t k = 1 + rng.below(16);
        CHECK(tree.knn(query, k) == brute_knn(c.points, query, k));
        CHECK(tree.nearest(query) == brute_knn(c.points, query, 1)[0]);
    }
}

TEST_CASE("knn is translation invariant and radius search is exact") {
    PointCloud c = testutil::uniform_box(31, 2000, Vec3(0, 0, 0), Vec3(1, 1, 1));
    PointCloud s = c;
    const Vec3 v(0.25, -0.5, 0.125);  // exactly representable shift
    for (Vec3& p : s.points) p += v;
    Rng rng(32);
    const KdTree tree(c.points);
    for (int q = 0; q < 200; ++q) {
        const Vec3 query(rng.uniform(), rng.uniform(), rng.uniform());
        CHECK(knn(c, query, 8) == knn(s, query + v, 8));
        const double r = rng.uniform(0.0, 0.2);
        std::vector<std::size_t> expected;
        for (std::size_t i = 0; i < c.size(); ++i)
            if ((c.points[i] - query).norm() <= r) expected.push_back(i);
        CHECK(tree.radius_search(query, r) == expected);
    }
    CHECK_THROWS_AS(KdTree().nearest(Vec3::Zero()), Error);
}

TEST_CASE("normal estimation") {
    PointCloud grid;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) grid.points.emplace_back(0.01 * i, 0.01 * j, 0.0);
    const PointCloud gn = estimate_normals(grid, 8);
    for (const Vec3& n : gn.normals) {
        CHECK(std::abs(std::abs(n.z()) - 1.0) < 1e-9);
        CHECK(n.z() == doctest::Approx(gn.normals[0].z()));
    }

    const PointCloud s = testutil::sphere(41, 4000, 0.5, Vec3(1, 2, 3));
    PointCloud bare;
    bare.points = s.points;
    const PointCloud sn = estimate_normals(bare, 12);
    double err = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(sn.normals[i].norm() - 1.0) < 1e-9);
        err += std::acos(std::clamp(sn.normals[i].dot(s.normals[i]), -1.0, 1.0));
    }
    CHECK(err / s.size() * 180.0 / std::numbers::pi < 10.0);

    CHECK_THROWS_AS(estimate_normals(bare, bare.size() + 1), Error);
    CHECK_THROWS_AS(estimate_normals(bare, 2), Error);
}

TEST_CASE("nearest-neighbour spacing and radius") {
    PointCloud line;
    for (int i = 0; i < 10; ++i) line.points.emplace_back(0.5 * i, 0, 0);
    CHECK(mean_nn_spacing(line) == doctest::Approx(0.5));
    CHECK(mean_nn_spacing(PointCloud{}) == 0.0);
    CHECK(max_radius(line, Vec3::Zero()) == doctest::Approx(4.5));
}

TEST_CASE("xyz and ply round trip") {
    PointCloud c = testutil::sphere(51, 100, 0.02);
    c.points[3] = Vec3(1e-300, -0.1, 12345.678901234567);
    const auto xyz = temp_file("rt.xyz"), ply = temp_file("rt.ply");
    io::write_cloud(xyz, c);
    io::write_cloud(ply, c);
    const PointCloud a = io::read_cloud(xyz), b = io::read_cloud(ply);
    CHECK(a.points == c.points);
    CHECK(!a.has_normals());
    CHECK(b.points == c.points);
    CHECK(b.normals == c.normals);
    std::filesystem::remove(xyz);
    std::filesystem::remove(ply);
}

TEST_CASE("ply loader variants and rejections") {
    const auto path = temp_file("v.ply");
    {
        std::ofstream out(path);
        out << "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float x\nproperty float y\n"
               "property float z\nproperty uchar red\nend_header\n0 1 2 255\n3 4 5 0\n";
    }
    const PointCloud c = io::read_ply(path);
    REQUIRE(c.size() == 2);
    CHECK(c.points[1] == Vec3(3, 4, 5));

    auto expect_code = [&](const std::string& body, ErrorCode code) {
        {
            std::ofstream out(path);
            out << body;
        }
        try {
            io::read_ply(path);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == code);
        }
    };
    expect_code("ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                "property float z\nend_header\n",
                ErrorCode::UnsupportedFormat);
    expect_code("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
                "element face 0\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n",
                ErrorCode::UnsupportedFormat);
    expect_code("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
                "end_header\n0 0 0\n",
                ErrorCode::ParseError);
    expect_code("not a ply\n", ErrorCode::ParseError);
    std::filesystem::remove(path);

    try {
        io::read_cloud(temp_file("missing.xyz"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
    }
}

TEST_CASE("xyz loader skips comments and extra columns") {
    const auto path = temp_file("c.xyz");
    {
        std::ofstream out(path);
        out << "# header\n1 2 3\n\n4 5 6 0.5 0.5 # tail\n";
    }
    const PointCloud c = io::read_xyz(path);
    REQUIRE(c.size() == 2);
    CHECK(c.points[1] == Vec3(4, 5, 6));
    {
        std::ofstream out(path);
        out << "1 2\n";
    }
    CHECK_THROWS_AS(io::read_xyz(path), Error);
    std::filesystem::remove(path);
}
