#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "occgrasp/completion.hpp"
#include "occgrasp/errors.hpp"
#include "occgrasp/io.hpp"
#include "occgrasp/occlusion.hpp"

using namespace occgrasp;
using testutil::Rng;

namespace {

SamplerConfig sampler(double base, double gain, std::uint64_t seed = 1, std::size_t n = 512) {
    SamplerConfig c;
    c.base_sigma = base;
    c.occlusion_gain = gain;
    c.seed = seed;
    c.n_output = n;
    return c;
}

// Direct per-point std of |p_k - mean| with K-1 denominator.
double reference_std(const std::vector<PointCloud>& s, std::size_t i) {
    const double K = static_cast<double>(s.size());
    Vec3 mean = Vec3::Zero();
    for (const auto& c : s) mean += c.points[i];
    mean /= K;
    std::vector<double> d;
    for (const auto& c : s) d.push_back((c.points[i] - mean).norm());
    double m = 0.0;
    for (double x : d) m += x / K;
    double ss = 0.0;
    for (double x : d) ss += (x - m) * (x - m);
    return std::sqrt(ss / (K - 1.0));
}

}  // namespace

TEST_CASE("ensemble construction and per-point std") {
    CHECK_THROWS_AS(CompletionEnsemble({PointCloud{}}), Error);
    PointCloud a, b;
    a.points = {Vec3(0, 0, 0)};
    b.points = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
    CHECK_THROWS_AS(CompletionEnsemble({a, b}), Error);

    Rng rng(3);
    std::vector<PointCloud> samples(5);
    for (auto& s : samples)
        for (int i = 0; i < 40; ++i) s.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
    const CompletionEnsemble ens(samples);
    CHECK(ens.K() == 5);
    CHECK(ens.N() == 40);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(ens.per_point_std()[i] == doctest::Approx(reference_std(samples, i)).epsilon(1e-12));
        CHECK(ens.per_point_std()[i] >= 0.0);
    }
    const double gu = global_uncertainty(ens);
    const auto [lo, hi] = std::minmax_element(ens.per_point_std().begin(), ens.per_point_std().end());
    CHECK(gu >= *lo);
    CHECK(gu <= *hi);

    const CompletionEnsemble axis(samples, SpreadMode::MeanAxisStd);
    for (std::size_t i = 0; i < 40; ++i) {
        double total = 0.0;
        for (int d = 0; d < 3; ++d) {
            double m = 0.0;
            for (const auto& s : samples) m += s.points[i][d] / 5.0;
            double ss = 0.0;
            for (const auto& s : samples) ss += (s.points[i][d] - m) * (s.points[i][d] - m);
            total += std::sqrt(ss / 4.0) / 3.0;
        }
        CHECK(axis.per_point_std()[i] == doctest::Approx(total).epsilon(1e-12));
    }

    // Rigid motion of every sample leaves the spread unchanged.
    const Mat3 R = testutil::random_rotation(rng);
    std::vector<PointCloud> moved = samples;
    for (auto& s : moved)
        for (Vec3& p : s.points) p = R * p + Vec3(4, -2, 1);
    const CompletionEnsemble me(moved);
    for (std::size_t i = 0; i < 40; ++i)
        CHECK(me.per_point_std()[i] == doctest::Approx(ens.per_point_std()[i]).epsilon(1e-9));
}

TEST_CASE("global uncertainty arithmetic") {
    PointCloud p0, p1;
    p0.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    p1.points = p0.points;
    CHECK(global_uncertainty(CompletionEnsemble({p0, p1})) == 0.0);

    // Two samples: deviations are both |delta|/2, so their std is 0; three
    // samples with one displaced point give a hand-computable value.
    PointCloud q0, q1, q2;
    q0.points = {Vec3(0, 0, 0), Vec3(0, 0, 0)};
    q1.points = q0.points;
    q2.points = {Vec3(0.03, 0, 0), Vec3(0.09, 0, 0)};
    const CompletionEnsemble e({q0, q1, q2});
    // Point 0: deviations {0.01, 0.01, 0.02}, mean 0.04/3, std = 0.01/sqrt(3).
    CHECK(e.per_point_std()[0] == doctest::Approx(0.01 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(e.per_point_std()[1] == doctest::Approx(0.03 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(global_uncertainty(e) == doctest::Approx(0.02 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("sampler error cases and zero noise") {
    const PointCloud shape = generate_strawberry(1, 2000, 0.01);
    CHECK_THROWS_AS(sample_completions(shape, shape, sampler(0.001, 5), 1), Error);
    CHECK_THROWS_AS(sample_completions(shape, PointCloud{}, sampler(0.001, 5), 4), Error);

    const CompletionEnsemble ens = sample_completions(shape, shape, sampler(0.0, 5), 6);
    CHECK(ens.N() == 512);
    for (std::size_t k = 1; k < ens.K(); ++k) {
        CHECK(ens.sample(k).points == ens.sample(0).points);
        CHECK(ens.sample(k).normals == ens.sample(0).normals);
    }
    for (double s : ens.per_point_std()) CHECK(s == 0.0);
    CHECK(ens.sample(0).points == canonical_completion(shape, sampler(0.0, 5)).points);
    CHECK(ens.sample(0).has_normals());
}

TEST_CASE("sampler is deterministic") {
    const PointCloud shape = generate_strawberry(2, 3000, 0.01);
    const PointCloud partial = apply_leaf(shape, place_leaf(shape, 0.3, 0.6, 0.01, 2)).occluded_cloud;
    const auto a = sample_completions(partial, shape, sampler(0.001, 5, 9), 4);
    const auto b = sample_completions(partial, shape, sampler(0.001, 5, 9), 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(a.sample(k).points == b.sample(k).points);
        CHECK(a.sample(k).normals == b.sample(k).normals);
    }
    CHECK(a.per_point_std() == b.per_point_std());
    const auto c = sample_completions(partial, shape, sampler(0.001, 5, 10), 4);
    CHECK(c.sample(0).points != a.sample(0).points);

    // Small shapes are cycled up to n_output.
    PointCloud tiny;
    for (int i = 0; i < 30; ++i) tiny.points.emplace_back(std::cos(i * 0.2), std::sin(i * 0.2), 0.01 * i);
    CHECK(canonical_completion(tiny, sampler(0, 0, 1, 100)).size() == 100);
}

TEST_CASE("global uncertainty matches the chi-distribution spread") {
    const double sigma = 0.001;
    const std::size_t K = 20;
    const PointCloud shape = generate_strawberry(5, 20000, 0.01);
    const auto ens = sample_completions(shape, shape, sampler(sigma, 0.0, 3, 8000), K);
    // |N(0, s^2 I3)| is chi with 3 dof scaled by s; deviation from the sample
    // mean has s = sigma * sqrt(1 - 1/K).
    const double chi_mean = std::sqrt(2.0) * std::tgamma(2.0) / std::tgamma(1.5);
    const double chi_std = std::sqrt(3.0 - chi_mean * chi_mean);
    const double expected = sigma * std::sqrt(1.0 - 1.0 / K) * chi_std;
    CHECK(std::abs(global_uncertainty(ens) - expected) < 0.1 * expected);
}

TEST_CASE("occlusion raises uncertainty and sigma is monotone") {
    double visible = 0.0, occluded = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const PointCloud shape = generate_strawberry(seed, 2000, 0.007);
        const PointCloud partial = apply_leaf(shape, place_leaf(shape, 0.4, 0.6, 0.01, seed)).occluded_cloud;
        visible += global_uncertainty(sample_completions(shape, shape, sampler(0.001, 5, seed, 256), 8));
        occluded += global_uncertainty(sample_completions(partial, shape, sampler(0.001, 5, seed, 256), 8));
    }
    CHECK(occluded > visible);

    const PointCloud shape = generate_strawberry(8, 2000, 0.01);
    const PointCloud partial = apply_leaf(shape, place_leaf(shape, 0.3, 0.6, 0.01, 8)).occluded_cloud;
    double prev = -1.0;
    for (int i = 0; i < 20; ++i) {
        const double gu = global_uncertainty(sample_completions(partial, shape, sampler(0.0002 * i, 5, 4, 256), 6));
        CHECK(gu >= prev);
        prev = gu;
    }
}

TEST_CASE("observation gap") {
    PointCloud canonical, partial;
    canonical.points = {Vec3(0, 0, 0), Vec3(0.5, 0, 0), Vec3(10, 0, 0)};
    partial.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    const auto gap = observation_gap(canonical, partial);
    CHECK(gap[0] == 0.0);
    CHECK(gap[1] == doctest::Approx(0.5));
    CHECK(gap[2] == 1.0);  // clamped at the diagonal
    CHECK(observation_gap(canonical, PointCloud{}) == std::vector<double>(3, 1.0));
}

TEST_CASE("local uncertainty slab") {
    // Two halves: x < 0 noise 0.001, x > 0 noise 0.004.
    Rng rng(12);
    const std::size_t K = 10;
    std::vector<PointCloud> samples(K);
    std::vector<Vec3> base;
    for (int i = 0; i < 400; ++i) base.emplace_back(rng.uniform(-0.02, 0.02), rng.uniform(-0.01, 0.01), rng.uniform(0, 0.01));
    for (auto& s : samples)
        for (const Vec3& p : base) s.points.push_back(p + (p.x() < 0 ? 0.001 : 0.004) * Vec3(rng.normal(), rng.normal(), rng.normal()));
    const CompletionEnsemble ens(samples);

    const auto left = testutil::pose(Vec3::UnitY(), -Vec3::UnitZ(), Vec3(-0.01, 0, 0.05));
    const auto right = testutil::pose(Vec3::UnitY(), -Vec3::UnitZ(), Vec3(0.01, 0, 0.05));
    const double lu = local_uncertainty(ens, left, 0.015, 0.1), ru = local_uncertainty(ens, right, 0.015, 0.1);
    CHECK(lu < ru);

    // Recompute the slab mean directly.
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < ens.N(); ++i) {
        const Vec3 r = ens.mean_cloud().points[i] - left.center;
        if (std::abs(r.dot(left.jaw_axis())) <= 0.0075 && std::abs(r.dot(left.minor_axis())) <= 0.0075 &&
            r.dot(left.approach()) >= 0 && r.dot(left.approach()) <= 0.1) {
            sum += ens.per_point_std()[i];
            ++count;
        }
    }
    REQUIRE(count > 0);
    CHECK(lu == doctest::Approx(sum / count).epsilon(1e-12));

    const auto away = testutil::pose(Vec3::UnitY(), -Vec3::UnitZ(), Vec3(1, 1, 1));
    CHECK(local_uncertainty(ens, away, 0.04, 0.1) == kNoPointsInSlice);

    // Constant spread field.
    std::vector<PointCloud> pair(2);
    for (const Vec3& p : base) {
        pair[0].points.push_back(p + Vec3(0.002, 0, 0));
        pair[1].points.push_back(p - Vec3(0.002, 0, 0));
    }
    std::vector<PointCloud> triple = {pair[0], pair[1], pair[0]};
    const CompletionEnsemble constant(triple);
    const double s = constant.per_point_std()[0];
    for (double v : constant.per_point_std()) CHECK(v == doctest::Approx(s).epsilon(1e-9));
    CHECK(local_uncertainty(constant, left, 0.02, 0.1) == doctest::Approx(s).epsilon(1e-9));
}

TEST_CASE("ensemble directory loading and correspondence") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "occgrasp_test_ens";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const PointCloud shape = generate_strawberry(3, 600, 0.01);
    const auto ens = sample_completions(shape, shape, sampler(0.0005, 0, 2, 300), 3);
    for (std::size_t k = 0; k < 3; ++k) io::write_xyz(dir / ("s" + std::to_string(k) + ".xyz"), ens.sample(k));
    const CompletionEnsemble loaded = load_ensemble_dir(dir);
    CHECK(loaded.K() == 3);
    CHECK(loaded.sample(1).points == ens.sample(1).points);
    for (std::size_t i = 0; i < loaded.N(); ++i)
        CHECK(loaded.per_point_std()[i] == doctest::Approx(ens.per_point_std()[i]).epsilon(1e-12));

    // Unequal sizes are matched to the first file by nearest neighbour.
    PointCloud shorter = ens.sample(2);
    shorter.points.resize(200);
    io::write_xyz(dir / "s2.xyz", shorter);
    const CompletionEnsemble matched = load_ensemble_dir(dir);
    CHECK(matched.N() == 300);
    const auto direct = correspond_to_reference({shorter}, ens.sample(0));
    CHECK(matched.sample(2).points == direct[0].points);

    fs::remove_all(dir);
    fs::create_directories(dir);
    io::write_xyz(dir / "only.xyz", shape);
    CHECK_THROWS_AS(load_ensemble_dir(dir), Error);
    fs::remove_all(dir);
    CHECK_THROWS_AS(load_ensemble_dir(dir), Error);
}
