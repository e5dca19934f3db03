#include "occgrasp/completion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "occgrasp/errors.hpp"
#include "occgrasp/io.hpp"
#include "occgrasp/kdtree.hpp"
#include "occgrasp/random.hpp"

namespace occgrasp {

CompletionEnsemble::CompletionEnsemble(std::vector<PointCloud> samples, SpreadMode mode)
    : samples_(std::move(samples)) {
    if (samples_.size() < 2)
        throw Error(ErrorCode::BadEnsembleSize,
                    "ensemble needs K >= 2 samples, got " + std::to_string(samples_.size()));
    const std::size_t n = samples_.front().size();
    for (const auto& s : samples_)
        if (s.size() != n) throw Error(ErrorCode::BadEnsembleSize, "ensemble samples differ in size");

    const double K = static_cast<double>(samples_.size());
    // Mean as first sample plus averaged offsets: exact when samples agree.
    const auto& first = samples_.front().points;
    std::vector<Vec3> offset(n, Vec3::Zero());
    for (const auto& s : samples_)
        for (std::size_t i = 0; i < n; ++i) offset[i] += s.points[i] - first[i];
    mean_.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) mean_.points[i] = first[i] + offset[i] / K;

    per_point_std_.assign(n, 0.0);
    std::vector<double> dev(samples_.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (mode == SpreadMode::DeviationNorm) {
            double mean_dev = 0.0;
            for (std::size_t k = 0; k < samples_.size(); ++k) {
                dev[k] = (samples_[k].points[i] - mean_.points[i]).norm();
                mean_dev += dev[k];
            }
            mean_dev /= K;
            double var = 0.0;
            for (double d : dev) var += (d - mean_dev) * (d - mean_dev);
            per_point_std_[i] = std::sqrt(var / (K - 1.0));
        } else {
            Vec3 var = Vec3::Zero();
            for (const auto& s : samples_) var += (s.points[i] - mean_.points[i]).cwiseAbs2();
            per_point_std_[i] = (var / (K - 1.0)).cwiseSqrt().mean();
        }
    }
}

namespace {

std::vector<Vec3> canonical_points(const PointCloud& ground, const SamplerConfig& cfg) {
    if (ground.empty()) throw Error(ErrorCode::EmptyShape, "sampler needs a non-empty canonical shape");
    const std::size_t n = ground.size();
    std::vector<std::size_t> idx;
    if (n >= cfg.n_output) {
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(derive_seed({cfg.seed, 0xca0ULL}));
        for (std::size_t i = 0; i < cfg.n_output; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
        idx.resize(cfg.n_output);
        std::sort(idx.begin(), idx.end());
    } else {
        idx.resize(cfg.n_output);
        for (std::size_t i = 0; i < cfg.n_output; ++i) idx[i] = i % n;
    }
    std::vector<Vec3> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(ground.points[i]);
    return out;
}

PointCloud with_normals(std::vector<Vec3> points, std::size_t normal_k) {
    PointCloud cloud;
    cloud.points = std::move(points);
    return estimate_normals(cloud, std::min(normal_k, cloud.size()));
}

}  // namespace

std::vector<double> observation_gap(const PointCloud& canonical, const PointCloud& partial) {
    std::vector<double> gap(canonical.size(), 1.0);
    if (partial.empty()) return gap;
    const double diag = bounding_box(partial).diagonal();
    const KdTree tree(partial.points);
    for (std::size_t i = 0; i < canonical.size(); ++i) {
        const Vec3& p = canonical.points[i];
        const double dist = (partial.points[tree.nearest(p)] - p).norm();
        gap[i] = diag > 0.0 ? std::min(dist, diag) / diag : (dist > 0.0 ? 1.0 : 0.0);
    }
    return gap;
}

PointCloud canonical_completion(const PointCloud& ground_shape, const SamplerConfig& cfg) {
    return with_normals(canonical_points(ground_shape, cfg), cfg.normal_k);
}

CompletionEnsemble sample_completions(const PointCloud& partial, const PointCloud& ground_shape,
                                      const SamplerConfig& cfg, std::size_t K) {
    if (K < 2) throw Error(ErrorCode::BadEnsembleSize, "K must be >= 2, got " + std::to_string(K));
    PointCloud canonical;
    canonical.points = canonical_points(ground_shape, cfg);
    const std::vector<double> gap = observation_gap(canonical, partial);

    std::vector<PointCloud> samples;
    samples.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        Rng rng(derive_seed({cfg.seed, 0x5a3bULL, k}));
        std::vector<Vec3> pts = canonical.points;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double sigma = cfg.base_sigma * (1.0 + cfg.occlusion_gain * gap[i]);
            const Vec3 noise(rng.normal(), rng.normal(), rng.normal());
            pts[i] += sigma * noise;
        }
        samples.push_back(with_normals(std::move(pts), cfg.normal_k));
    }
    return CompletionEnsemble(std::move(samples), cfg.spread);
}

double global_uncertainty(const CompletionEnsemble& ens) {
    const auto& s = ens.per_point_std();
    if (s.empty()) return 0.0;
    return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

double local_uncertainty(const CompletionEnsemble& ens, const GraspPose& grasp, double jaw_width,
                         double jaw_len) {
    const Vec3 x = grasp.jaw_axis(), y = grasp.minor_axis(), a = grasp.approach();
    const double half = 0.5 * jaw_width;
    double sum = 0.0;
    std::size_t count = 0;
    const auto& pts = ens.mean_cloud().points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3 r = pts[i] - grasp.center;
        const double depth = r.dot(a);
        if (std::abs(r.dot(x)) <= half && std::abs(r.dot(y)) <= half && depth >= 0.0 && depth <= jaw_len) {
            sum += ens.per_point_std()[i];
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : kNoPointsInSlice;
}

std::vector<PointCloud> correspond_to_reference(const std::vector<PointCloud>& samples,
                                                const PointCloud& reference) {
    std::vector<PointCloud> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.empty()) throw Error(ErrorCode::EmptyCloud, "cannot correspond an empty sample");
        const KdTree tree(s.points);
        PointCloud matched;
        matched.points.reserve(reference.size());
        for (const Vec3& p : reference.points) {
            const std::size_t j = tree.nearest(p);
            matched.points.push_back(s.points[j]);
            if (s.has_normals()) matched.normals.push_back(s.normals[j]);
        }
        out.push_back(std::move(matched));
    }
    return out;
}

CompletionEnsemble load_ensemble_dir(const std::filesystem::path& dir, std::size_t normal_k,
                                     SpreadMode mode) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".xyz" || ext == ".ply" || ext == ".txt"))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<PointCloud> samples;
    for (const auto& f : files) samples.push_back(io::read_cloud(f));
    if (samples.size() < 2)
        throw Error(ErrorCode::BadEnsembleSize, dir.string() + " holds fewer than 2 clouds");

    const bool same_size = std::all_of(samples.begin(), samples.end(),
                                       [&](const PointCloud& c) { return c.size() == samples[0].size(); });
    if (!same_size) samples = correspond_to_reference(samples, samples.front());
    for (auto& s : samples)
        if (!s.has_normals()) s = estimate_normals(s, std::min(normal_k, s.size()));
    return CompletionEnsemble(std::move(samples), mode);
}

}  // namespace occgrasp
