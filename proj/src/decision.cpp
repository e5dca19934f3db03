#include "occgrasp/decision.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "occgrasp/errors.hpp"
#include "occgrasp/random.hpp"

namespace occgrasp {

double z_schedule(double alpha) {
    static constexpr std::array<double, 5> grid{0.0, 0.1, 0.2, 0.3, 0.4};
    static constexpr std::array<double, 5> table{0.75, 0.88, 1.02, 1.15, 1.28};
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (std::abs(alpha - grid[i]) <= 1e-12) return table[i];
    return 0.75 + 1.325 * alpha;
}

EpsilonStats lcb_stats(std::span<const double> eps, double z) {
    if (eps.size() < 2)
        throw Error(ErrorCode::BadEnsembleSize, "lcb_stats needs K >= 2, got " + std::to_string(eps.size()));
    EpsilonStats s;
    s.eps.assign(eps.begin(), eps.end());
    s.z = z;
    const double K = static_cast<double>(eps.size());
    if (std::all_of(eps.begin(), eps.end(), [&](double e) { return e == eps.front(); })) {
        s.mean = eps.front();
        s.std = 0.0;
    } else {
        double sum = 0.0;
        for (double e : eps) sum += e;
        s.mean = sum / K;
        double ss = 0.0;
        for (double e : eps) ss += (e - s.mean) * (e - s.mean);
        s.std = std::sqrt(ss / (K - 1.0));
    }
    s.lcb = s.mean - z * s.std;
    return s;
}

const char* to_string(Mode m) {
    switch (m) {
        case Mode::Baseline: return "Baseline";
        case Mode::NoDropout: return "NoDropout";
        case Mode::Dropout: return "Dropout";
    }
    return "Unknown";
}

const char* to_string(AbstainReason r) {
    switch (r) {
        case AbstainReason::GlobalUncertainty: return "GlobalUncertainty";
        case AbstainReason::NoSurvivingGrasps: return "NoSurvivingGrasps";
        case AbstainReason::NonPositiveLCB: return "NonPositiveLCB";
        case AbstainReason::NoDetection: return "NoDetection";
    }
    return "Unknown";
}

const char* to_string(Verdict v) { return v == Verdict::Attempt ? "Attempt" : "Abstain"; }

Mode parse_mode(const std::string& s) {
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "baseline") return Mode::Baseline;
    if (lower == "nodropout" || lower == "no_dropout" || lower == "no-dropout") return Mode::NoDropout;
    if (lower == "dropout") return Mode::Dropout;
    throw Error(ErrorCode::ConfigError, "mode: unknown value '" + s + "'");
}

void PipelineConfig::validate() const {
    filter.validate();
    auto require = [](bool ok, const char* field, const char* why) {
        if (!ok) throw Error(ErrorCode::ConfigError, std::string(field) + ": " + why);
    };
    require(K >= 2, "K", "must be >= 2");
    require(quality.n_dir >= 3, "n_dir", "must be >= 3");
    require(quality.mu >= 0.0, "mu", "must be >= 0");
    require(quality.contact.step > 0.0, "march_step", "must be > 0");
    require(sampler.base_sigma >= 0.0, "base_sigma", "must be >= 0");
    require(sampler.occlusion_gain >= 0.0, "occlusion_gain", "must be >= 0");
    require(sampler.n_output >= 1, "n_output", "must be >= 1");
    require(sampler.normal_k >= 3, "normal_k", "must be >= 3");
    require(generator.max_width > 0.0, "max_width", "must be > 0");
    require(generator.standoff >= 0.0, "standoff", "must be >= 0");
    require(std::abs(generator.front.norm() - 1.0) <= 1e-6, "front", "must be a unit vector");
}

bool DecisionReport::consistent() const {
    if (verdict == Verdict::Attempt) {
        if (!selected_grasp || reason) return false;
        if (mode == Mode::Dropout && (!stats || !(stats->lcb > 0.0))) return false;
    } else if (!reason) {
        return false;
    }
    if (stats) {
        const auto& s = *stats;
        if (s.eps.size() < 2) return false;
        double sum = 0.0;
        for (double e : s.eps) sum += e;
        const double K = static_cast<double>(s.eps.size());
        double ss = 0.0;
        for (double e : s.eps) ss += (e - s.mean) * (e - s.mean);
        if (std::abs(s.mean - sum / K) > 1e-12) return false;
        if (std::abs(s.std - std::sqrt(ss / (K - 1.0))) > 1e-12) return false;
        if (std::abs(s.lcb - (s.mean - s.z * s.std)) > 1e-12) return false;
    }
    return true;
}

namespace {

std::size_t argmax_score(std::span<const GraspPose> grasps) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < grasps.size(); ++i)
        if (grasps[i].score > grasps[best].score) best = i;
    return best;
}

void abstain(DecisionReport& r, AbstainReason why) {
    r.verdict = Verdict::Abstain;
    r.reason = why;
    r.selected_grasp.reset();
}

void attempt(DecisionReport& r, GraspPose g, const PointCloud& completion, const PipelineConfig& cfg) {
    if (cfg.center_at_centroid)
        g.center = centroid(completion) - cfg.generator.standoff * g.approach();
    r.verdict = Verdict::Attempt;
    r.reason.reset();
    r.selected_grasp = g;
}

void decide_single(DecisionReport& r, const ObjectInput& object, Mode mode, const PipelineConfig& cfg,
                   const SamplerConfig& sampler, std::uint64_t gen_seed) {
    const PointCloud completion =
        object.ensemble ? object.ensemble->sample(0) : canonical_completion(object.shape, sampler);
    const auto grasps = generate_grasps(completion, cfg.generator, gen_seed);
    ++r.generation_calls;

    SampleRecord rec{0, grasps.size(), grasps.size(), 0.0};
    if (mode == Mode::Baseline) {
        r.per_sample.push_back(rec);
        if (grasps.empty()) return abstain(r, AbstainReason::NoSurvivingGrasps);
        return attempt(r, grasps[argmax_score(grasps)], completion, cfg);
    }

    const PointCloud& jaw_cloud = cfg.jaw_check_partial ? object.partial : completion;
    const FilterResult filtered = filter_pipeline(grasps, nullptr, jaw_cloud, cfg.filter);
    rec.M_prime = filtered.survivors.size();
    r.per_sample.push_back(rec);
    if (filtered.survivors.empty()) return abstain(r, AbstainReason::NoSurvivingGrasps);
    attempt(r, filtered.survivors[argmax_score(filtered.survivors)], completion, cfg);
}

void decide_dropout(DecisionReport& r, const ObjectInput& object, const PipelineConfig& cfg,
                    const SamplerConfig& sampler, std::uint64_t gen_seed) {
    const CompletionEnsemble ens =
        object.ensemble ? *object.ensemble : sample_completions(object.partial, object.shape, sampler, cfg.K);
    const double gu = global_uncertainty(ens);
    r.global_uncertainty = gu;
    if (!global_gate(gu, cfg.filter)) return abstain(r, AbstainReason::GlobalUncertainty);

    std::vector<double> eps(ens.K(), 0.0);
    std::vector<std::vector<GraspPose>> survivors(ens.K());
    for (std::size_t k = 0; k < ens.K(); ++k) {
        const PointCloud& cloud = ens.sample(k);
        const auto grasps = generate_grasps(cloud, cfg.generator, gen_seed);
        ++r.generation_calls;
        const PointCloud& jaw_cloud = cfg.jaw_check_partial ? object.partial : cloud;
        FilterResult filtered = filter_pipeline(grasps, &ens, jaw_cloud, cfg.filter);
        if (!filtered.survivors.empty())
            eps[k] = sample_epsilon(filtered.survivors, cloud, cfg.filter, cfg.quality).epsilon;
        r.per_sample.push_back({k, grasps.size(), filtered.survivors.size(), eps[k]});
        survivors[k] = std::move(filtered.survivors);
    }

    r.stats = lcb_stats(eps, z_schedule(object.alpha));
    if (!(r.stats->lcb > 0.0)) return abstain(r, AbstainReason::NonPositiveLCB);

    std::size_t best_k = 0;
    for (std::size_t k = 1; k < eps.size(); ++k)
        if (eps[k] > eps[best_k]) best_k = k;
    // lcb > 0 forces some eps_k > 0, which requires survivors in that sample.
    const auto& pool = survivors[best_k];
    attempt(r, pool[argmax_score(pool)], ens.mean_cloud(), cfg);
}

}  // namespace

DecisionReport decide(const ObjectInput& object, Mode mode, const PipelineConfig& cfg, std::uint64_t seed) {
    DecisionReport r;
    r.object_id = object.id;
    r.mode = mode;
    r.alpha = object.alpha;

    SamplerConfig sampler = cfg.sampler;
    sampler.seed = derive_seed({seed, 0x5a11ULL});
    const std::uint64_t gen_seed = derive_seed({seed, 0x6e11ULL});

    try {
        if (object.partial.empty() && !object.ensemble) {
            abstain(r, AbstainReason::NoDetection);
            return r;
        }
        if (mode == Mode::Dropout) decide_dropout(r, object, cfg, sampler, gen_seed);
        else decide_single(r, object, mode, cfg, sampler, gen_seed);
    } catch (const Error& e) {
        const bool detection = e.code() == ErrorCode::EmptyCloud || e.code() == ErrorCode::TooFewPoints ||
                               e.code() == ErrorCode::EmptyShape;
        abstain(r, detection ? AbstainReason::NoDetection : AbstainReason::NoSurvivingGrasps);
        r.error = e.what();
    }
    return r;
}

nlohmann::json to_json(const GraspPose& g) {
    nlohmann::json rot = nlohmann::json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) rot.push_back(g.rotation(i, j));
    return {{"rotation", rot}, {"center", {g.center.x(), g.center.y(), g.center.z()}}, {"score", g.score}};
}

nlohmann::json to_json(const DecisionReport& r) {
    using nlohmann::json;
    json samples = json::array();
    for (const auto& s : r.per_sample)
        samples.push_back({{"k", s.k}, {"M", s.M}, {"M_prime", s.M_prime}, {"eps", s.eps}});
    json j = {{"object_id", r.object_id},
              {"mode", to_string(r.mode)},
              {"alpha", r.alpha},
              {"global_uncertainty", r.global_uncertainty ? json(*r.global_uncertainty) : json(nullptr)},
              {"per_sample", samples},
              {"verdict", to_string(r.verdict)},
              {"reason", r.reason ? json(to_string(*r.reason)) : json(nullptr)},
              {"selected_grasp", r.selected_grasp ? to_json(*r.selected_grasp) : json(nullptr)}};
    if (r.stats) {
        j["mean"] = r.stats->mean;
        j["std"] = r.stats->std;
        j["z"] = r.stats->z;
        j["lcb"] = r.stats->lcb;
    } else {
        j["mean"] = j["std"] = j["z"] = j["lcb"] = nullptr;
    }
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

}  // namespace occgrasp
