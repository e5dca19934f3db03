#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "occgrasp/config.hpp"
#include "occgrasp/errors.hpp"
#include "occgrasp/harness.hpp"
#include "occgrasp/io.hpp"
#include "occgrasp/random.hpp"

using namespace occgrasp;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;

ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? ExperimentConfig{} : load_config(path);
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = config_or_default(config_path);
    std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    if (dir.empty()) throw Error(ErrorCode::ConfigError, "out_dir: no output directory given");
    const SweepReport report = run_sweep(cfg);
    write_sweep(report, cfg, dir);
    for (const AggregateRow& a : report.aggregates)
        std::cerr << to_string(a.mode) << " alpha=" << a.alpha << " attempt_rate=" << a.attempt_rate
                  << " mean_global_uncertainty=" << a.mean_global_uncertainty << '\n';
    return kOk;
}

int cmd_bench(const std::string& config_path) {
    const ExperimentConfig cfg = config_or_default(config_path);
    const BenchResult r = run_bench(cfg);
    std::cout << r.table.dump(2) << '\n';
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream(std::filesystem::path(cfg.out_dir) / "bench.json") << r.table.dump(2) << '\n';
    }
    return kOk;
}

int cmd_decide(const std::string& cloud_path, const std::string& mode_name, double alpha,
               const std::string& shape_path, const std::string& ensemble_dir, const std::string& config_path,
               std::uint64_t seed) {
    const ExperimentConfig cfg = config_or_default(config_path);
    const Mode mode = parse_mode(mode_name);
    if (alpha < 0.0) throw Error(ErrorCode::ConfigError, "alpha: must be >= 0");

    ObjectInput obj;
    obj.id = std::filesystem::path(cloud_path).stem().string();
    obj.alpha = alpha;
    obj.partial = clean(io::read_cloud(cloud_path));
    obj.shape = shape_path.empty() ? obj.partial : io::read_cloud(shape_path);
    if (!ensemble_dir.empty())
        obj.ensemble = load_ensemble_dir(ensemble_dir, cfg.pipeline.sampler.normal_k, cfg.pipeline.sampler.spread);
    const DecisionReport r = decide(obj, mode, cfg.pipeline, seed);
    std::cout << to_json(r).dump(2) << '\n';
    return kOk;
}

int cmd_gen(std::uint64_t seed, double alpha, const std::string& out, const std::string& config_path,
            const std::string& full_out) {
    const ExperimentConfig cfg = config_or_default(config_path);
    if (alpha < 0.0) throw Error(ErrorCode::ConfigError, "alpha: must be >= 0");
    const Scene s = make_scene(cfg, seed, alpha);
    io::write_cloud(out, s.observed);
    if (!full_out.empty()) io::write_cloud(full_out, s.full);
    nlohmann::json info = {{"seed", seed},
                           {"alpha", alpha},
                           {"n_full", s.full.size()},
                           {"n_occluded", s.n_occluded},
                           {"n_observed", s.observed.size()},
                           {"removed_fraction", s.removed_fraction},
                           {"centroid_shift", s.centroid_shift}};
    std::cout << info.dump(2) << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grasp feasibility and abstention engine for occluded fruit"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* sweep = app.add_subcommand("sweep", "Run an occlusion sweep and write reports");
    sweep->add_option("--config", config_path, "JSON config file");
    sweep->add_option("--out", out_dir, "Output directory");

    auto* bench = app.add_subcommand("bench", "Time pipeline stages and the jaw filter");
    bench->add_option("--config", config_path, "JSON config file");

    std::string cloud_path, mode_name = "Dropout", shape_path, ensemble_dir;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    auto* dec = app.add_subcommand("decide", "Decide one object and print the report as JSON");
    dec->add_option("--cloud", cloud_path, "Partial observation (.xyz or .ply)")->required();
    dec->add_option("--mode", mode_name, "Baseline, NoDropout or Dropout");
    dec->add_option("--alpha", alpha, "Occlusion level for the confidence schedule");
    dec->add_option("--shape", shape_path, "Shape cloud for the built-in sampler (defaults to --cloud)");
    dec->add_option("--ensemble", ensemble_dir, "Directory of completion samples");
    dec->add_option("--config", config_path, "JSON config file");
    dec->add_option("--seed", seed, "Decision seed");

    std::string gen_out, full_out;
    auto* gen = app.add_subcommand("gen", "Write an occluded synthetic fruit");
    gen->add_option("--seed", seed, "Scene seed");
    gen->add_option("--alpha", alpha, "Leaf occlusion level");
    gen->add_option("--out", gen_out, "Output cloud (.xyz or .ply)")->required();
    gen->add_option("--full", full_out, "Also write the unoccluded cloud");
    gen->add_option("--config", config_path, "JSON config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*sweep) return cmd_sweep(config_path, out_dir);
        if (*bench) return cmd_bench(config_path);
        if (*dec) return cmd_decide(cloud_path, mode_name, alpha, shape_path, ensemble_dir, config_path, seed);
        if (*gen) return cmd_gen(seed, alpha, gen_out, config_path, full_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::ConfigError ? kConfigError : kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kOk;
}
