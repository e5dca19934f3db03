#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "occgrasp/geom.hpp"
#include "occgrasp/grasp.hpp"

namespace occgrasp {

/// How the per-point spread across samples is summarised.
enum class SpreadMode {
    DeviationNorm,  ///< std (K-1) of |p_i^k - mean_i| over k (default)
    MeanAxisStd,    ///< mean of the three per-axis stds (K-1)
};

/// K index-corresponded completions of one object plus per-point spread.
class CompletionEnsemble {
public:
    /// Throws BadEnsembleSize unless there are >= 2 samples of equal size.
    explicit CompletionEnsemble(std::vector<PointCloud> samples,
                                SpreadMode mode = SpreadMode::DeviationNorm);

    std::size_t K() const noexcept { return samples_.size(); }
    std::size_t N() const noexcept { return samples_.front().size(); }
    const std::vector<PointCloud>& samples() const noexcept { return samples_; }
    const PointCloud& sample(std::size_t k) const { return samples_.at(k); }
    const std::vector<double>& per_point_std() const noexcept { return per_point_std_; }
    /// Across-sample mean position of every point (no normals).
    const PointCloud& mean_cloud() const noexcept { return mean_; }

private:
    std::vector<PointCloud> samples_;
    std::vector<double> per_point_std_;
    PointCloud mean_;
};

struct SamplerConfig {
    double base_sigma = 0.001;    ///< noise std on observed regions (m)
    double occlusion_gain = 5.0;  ///< growth of the std with normalised distance to the observation
    std::size_t n_output = 1024;  ///< points per completion
    std::uint64_t seed = 0;
    std::size_t normal_k = 16;    ///< neighbours for per-sample normal estimation
    SpreadMode spread = SpreadMode::DeviationNorm;
};

/// Normalised distance to the observation for each canonical point: the
/// nearest-observed-point distance clamped to [0, diag(partial)] and divided
/// by diag(partial). An empty partial maps every point to 1.
std::vector<double> observation_gap(const PointCloud& canonical, const PointCloud& partial);

/// The canonical completion: `n_output` points chosen from `ground_shape`
/// with the config seed, normals estimated with `normal_k`. This is the
/// zero-noise member of the sampler family. Throws EmptyShape.
PointCloud canonical_completion(const PointCloud& ground_shape, const SamplerConfig& cfg);

/// Built-in stochastic completion: K perturbations of the canonical shape
/// with sigma_i = base_sigma * (1 + occlusion_gain * gap_i). Sample k draws
/// from its own seed stream, so samples are order independent.
/// Throws BadEnsembleSize (K < 2) and EmptyShape.
CompletionEnsemble sample_completions(const PointCloud& partial, const PointCloud& ground_shape,
                                      const SamplerConfig& cfg, std::size_t K);

/// Mean of per_point_std.
double global_uncertainty(const CompletionEnsemble& ens);

/// Sentinel for a grasp slice that contains no points of the mean cloud.
inline constexpr double kNoPointsInSlice = std::numeric_limits<double>::infinity();

/// Mean per_point_std over mean-cloud points in the grasp slab
/// |(p-c).x| <= w/2, |(p-c).y| <= w/2, (p-c).a in [0, t]; kNoPointsInSlice if empty.
double local_uncertainty(const CompletionEnsemble& ens, const GraspPose& grasp, double jaw_width,
                         double jaw_len);

/// Reorders each sample to the reference by nearest neighbour, giving
/// index correspondence for externally produced, uncorresponded completions.
std::vector<PointCloud> correspond_to_reference(const std::vector<PointCloud>& samples,
                                                const PointCloud& reference);

/// Loads every .xyz/.ply file in `dir` (sorted by file name). Files of equal
/// size are assumed corresponded; otherwise they are matched to the first.
/// Normals are estimated when absent.
CompletionEnsemble load_ensemble_dir(const std::filesystem::path& dir, std::size_t normal_k = 16,
                                     SpreadMode mode = SpreadMode::DeviationNorm);

}  // namespace occgrasp
