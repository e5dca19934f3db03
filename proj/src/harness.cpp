#include "occgrasp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "occgrasp/errors.hpp"
#include "occgrasp/io.hpp"
#include "occgrasp/random.hpp"

namespace occgrasp {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string num(double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); }

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

constexpr std::array<AbstainReason, 4> kReasons{AbstainReason::GlobalUncertainty,
                                                AbstainReason::NoSurvivingGrasps,
                                                AbstainReason::NonPositiveLCB, AbstainReason::NoDetection};

}  // namespace

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) {
    return derive_seed({base_seed, 0x7121aULL, static_cast<std::uint64_t>(trial)});
}

Scene make_scene(const ExperimentConfig& cfg, std::uint64_t seed, double alpha) {
    Scene s;
    s.seed = seed;
    s.alpha = alpha;
    s.full = generate_strawberry(derive_seed({seed, 1}), cfg.fruit_points, cfg.fruit_scale);
    s.leaf = place_leaf(s.full, alpha, cfg.leaf_aspect, cfg.leaf_thickness, derive_seed({seed, 2}));
    OcclusionOutcome occ = apply_leaf(s.full, s.leaf);
    s.n_occluded = occ.occluded_cloud.size();
    s.removed_fraction = occ.removed_fraction;
    if (!occ.occluded_cloud.empty()) {
        s.centroid_shift = centroid_shift(s.full, occ.occluded_cloud);
        s.centroid_shift_radius = centroid_shift_radius(s.full, occ.occluded_cloud);
    }

    // Stand-in for detection: the scene carries far clutter and a dropout
    // sample; cleaning and an Aabb crop around the fruit isolate the object.
    const Aabb crop_box = bounding_box(s.full).padded(cfg.crop_pad);
    PointCloud scene = std::move(occ.occluded_cloud);
    const bool normals = scene.has_normals() || scene.empty();
    Rng rng(derive_seed({seed, 3}));
    const Vec3 lo = crop_box.center() - 10.0 * crop_box.extent();
    const Vec3 hi = crop_box.center() + 10.0 * crop_box.extent();
    for (std::size_t i = 0; i < cfg.clutter_points;) {
        const Vec3 p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), rng.uniform(lo.z(), hi.z()));
        if (crop_box.contains(p)) continue;
        scene.points.push_back(p);
        if (normals) scene.normals.push_back(Vec3::UnitX());
        ++i;
    }
    if (cfg.clutter_points > 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        scene.points.emplace_back(nan, nan, nan);
        if (normals) scene.normals.push_back(Vec3::UnitX());
    }
    s.observed = crop(clean(scene), crop_box);
    return s;
}

std::size_t resolve_threads(std::size_t configured) {
    if (configured > 0) return configured;
    if (const char* env = std::getenv("OCCGRASP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
        throw Error(ErrorCode::ConfigError, std::string("OCCGRASP_THREADS: expected a positive integer, got '") +
                                                env + "'");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

SweepReport run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t threads = resolve_threads(cfg.threads);
    const std::size_t n_alpha = cfg.alpha_grid.size();
    const std::size_t n_trials = cfg.trials_per_alpha;
    SweepReport report;

    auto t0 = Clock::now();
    std::vector<Scene> scenes(n_alpha * n_trials);
    parallel_for(scenes.size(), threads, [&](std::size_t i) {
        const std::size_t a = i / n_trials, t = i % n_trials;
        scenes[i] = make_scene(cfg, trial_seed(cfg.seed, t), cfg.alpha_grid[a]);
    });
    report.timing["scenes"] = seconds_since(t0);

    for (const Scene& s : scenes)
        report.occlusion.push_back({s.seed, s.alpha, s.full.size(), s.n_occluded, s.removed_fraction,
                                    s.centroid_shift, s.centroid_shift_radius});

    std::vector<Mode> modes = cfg.modes;
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());

    const std::size_t n_jobs = modes.size() * scenes.size();
    report.rows.resize(n_jobs);
    std::vector<double> job_seconds(n_jobs, 0.0);
    t0 = Clock::now();
    parallel_for(n_jobs, threads, [&](std::size_t j) {
        const auto start = Clock::now();
        const Mode mode = modes[j / scenes.size()];
        const std::size_t i = j % scenes.size();
        const std::size_t a = i / n_trials, t = i % n_trials;
        const Scene& s = scenes[i];

        ObjectInput obj;
        obj.id = "a" + std::to_string(a) + "_t" + std::to_string(t);
        obj.partial = s.observed;
        obj.shape = s.full;
        obj.alpha = s.alpha;

        SweepRow& row = report.rows[j];
        row.mode = mode;
        row.alpha_index = a;
        row.alpha = s.alpha;
        row.trial = t;
        row.group = t / cfg.fruits_per_trial;
        row.seed = s.seed;
        row.n_full = s.full.size();
        row.n_observed = s.observed.size();
        row.removed_fraction = s.removed_fraction;
        row.centroid_shift = s.centroid_shift;
        row.report = decide(obj, mode, cfg.pipeline, derive_seed({s.seed, 0xdec1ULL}));
        job_seconds[j] = seconds_since(start);
    });
    report.timing["decisions"] = seconds_since(t0);
    for (std::size_t j = 0; j < n_jobs; ++j)
        report.timing[std::string("decide_") + to_string(report.rows[j].mode)] += job_seconds[j];
    report.timing["threads"] = static_cast<double>(threads);

    report.aggregates = aggregate(report.rows, cfg);
    return report;
}

std::vector<AggregateRow> aggregate(const std::vector<SweepRow>& rows, const ExperimentConfig& cfg) {
    std::vector<AggregateRow> out;
    const std::size_t groups = (cfg.trials_per_alpha + cfg.fruits_per_trial - 1) / cfg.fruits_per_trial;
    for (std::size_t start = 0; start < rows.size();) {
        std::size_t end = start;
        while (end < rows.size() && rows[end].mode == rows[start].mode &&
               rows[end].alpha_index == rows[start].alpha_index)
            ++end;
        AggregateRow agg;
        agg.mode = rows[start].mode;
        agg.alpha = rows[start].alpha;
        agg.n = end - start;
        agg.group_attempts.assign(groups, 0);
        for (AbstainReason r : kReasons) agg.reasons[to_string(r)] = 0;
        double gu_sum = 0.0, removed_sum = 0.0, shift_sum = 0.0;
        std::size_t gu_n = 0;
        for (std::size_t i = start; i < end; ++i) {
            const SweepRow& row = rows[i];
            if (row.report.verdict == Verdict::Attempt) {
                ++agg.attempts;
                if (row.group < groups) ++agg.group_attempts[row.group];
            } else if (row.report.reason) {
                ++agg.reasons[to_string(*row.report.reason)];
            }
            if (row.report.global_uncertainty) {
                gu_sum += *row.report.global_uncertainty;
                ++gu_n;
            }
            removed_sum += row.removed_fraction;
            shift_sum += row.centroid_shift;
        }
        const double n = static_cast<double>(agg.n);
        agg.attempt_rate = static_cast<double>(agg.attempts) / n;
        agg.mean_global_uncertainty =
            gu_n ? gu_sum / static_cast<double>(gu_n) : std::numeric_limits<double>::quiet_NaN();
        agg.mean_removed_fraction = removed_sum / n;
        agg.mean_centroid_shift = shift_sum / n;
        out.push_back(std::move(agg));
        start = end;
    }
    return out;
}

std::string results_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "mode,alpha,trial,group,seed,object_id,n_full,n_observed,removed_fraction,centroid_shift,"
           "global_uncertainty,M_total,M_prime_total,mean,std,z,lcb,verdict,reason,score,cx,cy,cz,error\n";
    for (const SweepRow& row : rows) {
        const DecisionReport& r = row.report;
        std::size_t m = 0, mp = 0;
        for (const auto& s : r.per_sample) {
            m += s.M;
            mp += s.M_prime;
        }
        out << to_string(row.mode) << ',' << num(row.alpha) << ',' << row.trial << ',' << row.group << ','
            << row.seed << ',' << r.object_id << ',' << row.n_full << ',' << row.n_observed << ','
            << num(row.removed_fraction) << ',' << num(row.centroid_shift) << ',' << opt(r.global_uncertainty)
            << ',' << m << ',' << mp << ',';
        if (r.stats) {
            out << num(r.stats->mean) << ',' << num(r.stats->std) << ',' << num(r.stats->z) << ','
                << num(r.stats->lcb) << ',';
        } else {
            out << ",,,,";
        }
        out << to_string(r.verdict) << ',' << (r.reason ? to_string(*r.reason) : "") << ',';
        if (r.selected_grasp) {
            const auto& g = *r.selected_grasp;
            out << num(g.score) << ',' << num(g.center.x()) << ',' << num(g.center.y()) << ','
                << num(g.center.z()) << ',';
        } else {
            out << ",,,,";
        }
        out << sanitize(r.error) << '\n';
    }
    return out.str();
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    out << "mode,alpha,n,attempts,attempt_rate";
    for (AbstainReason r : kReasons) out << ",abstain_" << to_string(r);
    out << ",mean_global_uncertainty,mean_removed_fraction,mean_centroid_shift\n";
    for (const AggregateRow& a : rows) {
        out << to_string(a.mode) << ',' << num(a.alpha) << ',' << a.n << ',' << a.attempts << ','
            << num(a.attempt_rate);
        for (AbstainReason r : kReasons) out << ',' << a.reasons.at(to_string(r));
        out << ',' << num(a.mean_global_uncertainty) << ',' << num(a.mean_removed_fraction) << ','
            << num(a.mean_centroid_shift) << '\n';
    }
    return out.str();
}

std::string occlusion_csv(const std::vector<OcclusionRow>& rows) {
    std::ostringstream out;
    out << "seed,alpha,n_full,n_occluded,removed_fraction,centroid_shift,centroid_shift_radius\n";
    for (const OcclusionRow& o : rows)
        out << o.seed << ',' << num(o.alpha) << ',' << o.n_full << ',' << o.n_occluded << ','
            << num(o.removed_fraction) << ',' << num(o.centroid_shift) << ',' << num(o.centroid_shift_radius)
            << '\n';
    return out.str();
}

void write_sweep(const SweepReport& report, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

    write_text(dir / "results.csv", results_csv(report.rows));
    write_text(dir / "aggregate.csv", aggregate_csv(report.aggregates));
    write_text(dir / "occlusion.csv", occlusion_csv(report.occlusion));

    json decisions = json::array();
    for (const SweepRow& row : report.rows) {
        decisions.push_back({{"mode", to_string(row.mode)},
                             {"alpha", row.alpha},
                             {"trial", row.trial},
                             {"group", row.group},
                             {"seed", row.seed},
                             {"report", to_json(row.report)}});
    }
    write_text(dir / "decisions.json", decisions.dump(1) + "\n");

    json agg = json::array();
    for (const AggregateRow& a : report.aggregates) {
        agg.push_back({{"mode", to_string(a.mode)},
                       {"alpha", a.alpha},
                       {"n", a.n},
                       {"attempts", a.attempts},
                       {"attempt_rate", a.attempt_rate},
                       {"abstain_reasons", a.reasons},
                       {"mean_global_uncertainty", finite_or_null(a.mean_global_uncertainty)},
                       {"mean_removed_fraction", a.mean_removed_fraction},
                       {"mean_centroid_shift", a.mean_centroid_shift},
                       {"fruits_per_trial", cfg.fruits_per_trial},
                       {"group_attempts", a.group_attempts}});
    }
    write_text(dir / "aggregate.json", json({{"config", to_json(cfg)}, {"aggregates", agg}}).dump(1) + "\n");
    write_text(dir / "timing.json", json(report.timing).dump(1) + "\n");
}

BenchResult bench_jaw(const ExperimentConfig& cfg, std::size_t n_points) {
    const PipelineConfig& p = cfg.pipeline;
    const PointCloud fruit = generate_strawberry(derive_seed({cfg.seed, 0xbe1}), cfg.fruit_points, cfg.fruit_scale);
    const PointCloud completion = canonical_completion(fruit, p.sampler);
    GraspGenConfig gen = p.generator;
    gen.max_grasps = cfg.bench_grasps;
    const auto grasps = generate_grasps(completion, gen, derive_seed({cfg.seed, 0xbe2}));
    const PointCloud cloud = generate_strawberry(derive_seed({cfg.seed, 0xbe3}), n_points, cfg.fruit_scale);

    std::vector<char> naive(grasps.size()), prefilter(grasps.size()), indexed(grasps.size());
    std::vector<double> t_naive, t_prefilter, t_indexed, t_build;
    bool identical = true, repeatable = true;
    std::vector<char> first;
    for (std::size_t rep = 0; rep < cfg.bench_reps; ++rep) {
        auto t0 = Clock::now();
        for (std::size_t i = 0; i < grasps.size(); ++i) naive[i] = jaw_intersection_naive(grasps[i], cloud, p.filter);
        t_naive.push_back(seconds_since(t0));

        t0 = Clock::now();
        for (std::size_t i = 0; i < grasps.size(); ++i)
            prefilter[i] = jaw_intersection_fast(grasps[i], cloud, p.filter);
        t_prefilter.push_back(seconds_since(t0));

        t0 = Clock::now();
        const JawClearanceIndex index(cloud);
        t_build.push_back(seconds_since(t0));
        for (std::size_t i = 0; i < grasps.size(); ++i) indexed[i] = index.passes(grasps[i], p.filter);
        t_indexed.push_back(seconds_since(t0));

        identical = identical && naive == prefilter && naive == indexed;
        if (rep == 0) first = naive;
        repeatable = repeatable && naive == first;
    }

    BenchResult r;
    const double naive_med = median(t_naive), indexed_med = median(t_indexed);
    r.verdicts_identical = identical && repeatable;
    r.jaw_speedup = indexed_med > 0.0 ? naive_med / indexed_med : 0.0;
    const auto passed = static_cast<std::size_t>(std::count(naive.begin(), naive.end(), 1));
    r.table = {{"points", n_points},
               {"grasps", grasps.size()},
               {"passed", passed},
               {"reps", cfg.bench_reps},
               {"naive_median_s", naive_med},
               {"prefilter_median_s", median(t_prefilter)},
               {"index_build_median_s", median(t_build)},
               {"indexed_median_s", indexed_med},
               {"speedup", indexed_med > 0.0 ? json(r.jaw_speedup) : json(nullptr)},
               {"verdicts_identical", identical},
               {"verdicts_repeatable", repeatable}};
    return r;
}

BenchResult run_bench(const ExperimentConfig& cfg) {
    cfg.validate();
    const PipelineConfig& p = cfg.pipeline;
    const double alpha = *std::max_element(cfg.alpha_grid.begin(), cfg.alpha_grid.end());
    const Scene scene = make_scene(cfg, trial_seed(cfg.seed, 0), alpha);

    std::map<std::string, std::vector<double>> t;
    std::vector<std::size_t> survivors_seen;
    for (std::size_t rep = 0; rep < cfg.bench_reps; ++rep) {
        SamplerConfig sampler = p.sampler;
        sampler.seed = derive_seed({cfg.seed, 0xbe4});
        auto t0 = Clock::now();
        const CompletionEnsemble ens = sample_completions(scene.observed, scene.full, sampler, p.K);
        t["ensemble_sampling"].push_back(seconds_since(t0));

        std::vector<double> eps(ens.K(), 0.0);
        double gen_s = 0.0, filter_s = 0.0, eps_s = 0.0;
        std::size_t survivors = 0;
        for (std::size_t k = 0; k < ens.K(); ++k) {
            t0 = Clock::now();
            const auto grasps = generate_grasps(ens.sample(k), p.generator, derive_seed({cfg.seed, 0xbe5}));
            gen_s += seconds_since(t0);
            t0 = Clock::now();
            const FilterResult fr = filter_pipeline(grasps, &ens, ens.sample(k), p.filter);
            filter_s += seconds_since(t0);
            survivors += fr.survivors.size();
            t0 = Clock::now();
            if (!fr.survivors.empty())
                eps[k] = sample_epsilon(fr.survivors, ens.sample(k), p.filter, p.quality).epsilon;
            eps_s += seconds_since(t0);
        }
        const double kd = static_cast<double>(ens.K());
        t["generation_per_sample"].push_back(gen_s / kd);
        t["filtering_per_sample"].push_back(filter_s / kd);
        t["epsilon_per_sample"].push_back(eps_s / kd);
        t0 = Clock::now();
        const EpsilonStats stats = lcb_stats(eps, z_schedule(alpha));
        (void)stats;
        t["aggregation"].push_back(seconds_since(t0));
        survivors_seen.push_back(survivors);
    }

    BenchResult r = bench_jaw(cfg, cfg.bench_points);
    const BenchResult empty = bench_jaw(cfg, 0);
    json stages = json::object();
    for (const auto& [name, v] : t) stages[name] = median(v);
    r.table = {{"alpha", alpha},
               {"K", p.K},
               {"reps", cfg.bench_reps},
               {"stage_median_s", stages},
               {"survivors_repeatable",
                std::all_of(survivors_seen.begin(), survivors_seen.end(),
                            [&](std::size_t s) { return s == survivors_seen.front(); })},
               {"jaw_filter", r.table},
               {"jaw_filter_empty_cloud", empty.table}};
    r.verdicts_identical = r.verdicts_identical && empty.verdicts_identical;
    return r;
}

}  // namespace occgrasp
