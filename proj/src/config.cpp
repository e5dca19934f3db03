#include "occgrasp/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "occgrasp/errors.hpp"

namespace occgrasp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& why) {
    throw Error(ErrorCode::ConfigError, key + ": " + why);
}

double get_number(const std::string& key, const json& v) {
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
}

std::size_t get_count(const std::string& key, const json& v) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0) fail(key, "expected a non-negative integer");
    return v.get<std::size_t>();
}

bool get_bool(const std::string& key, const json& v) {
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const std::string& key, const json& v) {
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
}

Vec3 get_vec3(const std::string& key, const json& v) {
    if (!v.is_array() || v.size() != 3) fail(key, "expected an array of three numbers");
    return {get_number(key, v[0]), get_number(key, v[1]), get_number(key, v[2])};
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto num = [&t](const char* key, auto member) {
            t[key] = [member](ExperimentConfig& c, const std::string& k, const json& v) {
                member(c) = get_number(k, v);
            };
        };
        auto count = [&t](const char* key, auto member) {
            t[key] = [member](ExperimentConfig& c, const std::string& k, const json& v) {
                member(c) = get_count(k, v);
            };
        };
        auto flag = [&t](const char* key, auto member) {
            t[key] = [member](ExperimentConfig& c, const std::string& k, const json& v) {
                member(c) = get_bool(k, v);
            };
        };

        num("theta_dot", [](ExperimentConfig& c) -> double& { return c.pipeline.filter.theta_dot; });
        num("theta_vert", [](ExperimentConfig& c) -> double& { return c.pipeline.filter.theta_vert; });
        num("tau", [](ExperimentConfig& c) -> double& { return c.pipeline.filter.tau; });
        num("jaw_width", [](ExperimentConfig& c) -> double& { return c.pipeline.filter.jaw_width; });
        num("jaw_len_min", [](ExperimentConfig& c) -> double& { return c.pipeline.filter.jaw_len_min; });
        num("jaw_len_max", [](ExperimentConfig& c) -> double& { return c.pipeline.filter.jaw_len_max; });
        num("delta_global", [](ExperimentConfig& c) -> double& { return c.pipeline.filter.delta_global; });
        num("delta_local", [](ExperimentConfig& c) -> double& { return c.pipeline.filter.delta_local; });
        t["front"] = [](ExperimentConfig& c, const std::string& k, const json& v) {
            c.pipeline.filter.front = get_vec3(k, v);
            c.pipeline.generator.front = c.pipeline.filter.front;
        };
        t["world_up"] = [](ExperimentConfig& c, const std::string& k, const json& v) {
            c.pipeline.filter.world_up = get_vec3(k, v);
        };

        count("M", [](ExperimentConfig& c) -> std::size_t& { return c.pipeline.generator.max_grasps; });
        num("max_width", [](ExperimentConfig& c) -> double& { return c.pipeline.generator.max_width; });
        num("standoff", [](ExperimentConfig& c) -> double& { return c.pipeline.generator.standoff; });
        count("attempts_per_grasp",
              [](ExperimentConfig& c) -> std::size_t& { return c.pipeline.generator.attempts_per_grasp; });

        t["mu"] = [](ExperimentConfig& c, const std::string& k, const json& v) {
            c.pipeline.quality.mu = get_number(k, v);
            c.pipeline.generator.mu = c.pipeline.quality.mu;
        };
        count("n_dir", [](ExperimentConfig& c) -> std::size_t& { return c.pipeline.quality.n_dir; });
        num("march_step", [](ExperimentConfig& c) -> double& { return c.pipeline.quality.contact.step; });
        num("contact_radius",
            [](ExperimentConfig& c) -> double& { return c.pipeline.quality.contact.contact_radius; });
        t["epsilon_mode"] = [](ExperimentConfig& c, const std::string& k, const json& v) {
            const std::string s = get_string(k, v);
            if (s == "union") c.pipeline.quality.mode = EpsilonMode::Union;
            else if (s == "best_single") c.pipeline.quality.mode = EpsilonMode::BestSingle;
            else fail(k, "expected \"union\" or \"best_single\"");
        };

        num("base_sigma", [](ExperimentConfig& c) -> double& { return c.pipeline.sampler.base_sigma; });
        num("occlusion_gain", [](ExperimentConfig& c) -> double& { return c.pipeline.sampler.occlusion_gain; });
        count("n_output", [](ExperimentConfig& c) -> std::size_t& { return c.pipeline.sampler.n_output; });
        count("normal_k", [](ExperimentConfig& c) -> std::size_t& { return c.pipeline.sampler.normal_k; });
        t["spread"] = [](ExperimentConfig& c, const std::string& k, const json& v) {
            const std::string s = get_string(k, v);
            if (s == "deviation_norm") c.pipeline.sampler.spread = SpreadMode::DeviationNorm;
            else if (s == "mean_axis_std") c.pipeline.sampler.spread = SpreadMode::MeanAxisStd;
            else fail(k, "expected \"deviation_norm\" or \"mean_axis_std\"");
        };
        count("K", [](ExperimentConfig& c) -> std::size_t& { return c.pipeline.K; });
        flag("jaw_check_partial", [](ExperimentConfig& c) -> bool& { return c.pipeline.jaw_check_partial; });
        flag("center_at_centroid", [](ExperimentConfig& c) -> bool& { return c.pipeline.center_at_centroid; });

        t["alpha_grid"] = [](ExperimentConfig& c, const std::string& k, const json& v) {
            if (!v.is_array()) fail(k, "expected an array of numbers");
            c.alpha_grid.clear();
            for (const auto& a : v) c.alpha_grid.push_back(get_number(k, a));
        };
        count("trials_per_alpha", [](ExperimentConfig& c) -> std::size_t& { return c.trials_per_alpha; });
        t["seed"] = [](ExperimentConfig& c, const std::string& k, const json& v) {
            c.seed = static_cast<std::uint64_t>(get_count(k, v));
        };
        t["modes"] = [](ExperimentConfig& c, const std::string& k, const json& v) {
            if (!v.is_array()) fail(k, "expected an array of mode names");
            c.modes.clear();
            for (const auto& m : v) {
                try {
                    c.modes.push_back(parse_mode(get_string(k, m)));
                } catch (const Error&) {
                    fail(k, "unknown mode '" + m.get<std::string>() + "'");
                }
            }
        };
        count("fruit_points", [](ExperimentConfig& c) -> std::size_t& { return c.fruit_points; });
        num("fruit_scale", [](ExperimentConfig& c) -> double& { return c.fruit_scale; });
        num("leaf_aspect", [](ExperimentConfig& c) -> double& { return c.leaf_aspect; });
        num("leaf_thickness", [](ExperimentConfig& c) -> double& { return c.leaf_thickness; });
        count("clutter_points", [](ExperimentConfig& c) -> std::size_t& { return c.clutter_points; });
        num("crop_pad", [](ExperimentConfig& c) -> double& { return c.crop_pad; });
        count("fruits_per_trial", [](ExperimentConfig& c) -> std::size_t& { return c.fruits_per_trial; });
        count("bench_points", [](ExperimentConfig& c) -> std::size_t& { return c.bench_points; });
        count("bench_reps", [](ExperimentConfig& c) -> std::size_t& { return c.bench_reps; });
        count("bench_grasps", [](ExperimentConfig& c) -> std::size_t& { return c.bench_grasps; });
        count("threads", [](ExperimentConfig& c) -> std::size_t& { return c.threads; });
        t["out_dir"] = [](ExperimentConfig& c, const std::string& k, const json& v) {
            c.out_dir = get_string(k, v);
        };
        return t;
    }();
    return table;
}

}  // namespace

void ExperimentConfig::validate() const {
    pipeline.validate();
    if (alpha_grid.empty()) fail("alpha_grid", "must not be empty");
    for (double a : alpha_grid)
        if (a < 0.0) fail("alpha_grid", "values must be >= 0");
    if (trials_per_alpha < 1) fail("trials_per_alpha", "must be >= 1");
    if (modes.empty()) fail("modes", "must not be empty");
    if (pipeline.generator.max_grasps < 1) fail("M", "must be >= 1");
    if (pipeline.generator.attempts_per_grasp < 1) fail("attempts_per_grasp", "must be >= 1");
    if (fruit_points < 16) fail("fruit_points", "must be >= 16");
    if (!(fruit_scale > 0.0)) fail("fruit_scale", "must be > 0");
    if (!(leaf_aspect > 0.0)) fail("leaf_aspect", "must be > 0");
    if (leaf_thickness < 0.0) fail("leaf_thickness", "must be >= 0");
    if (crop_pad < 0.0) fail("crop_pad", "must be >= 0");
    if (fruits_per_trial < 1) fail("fruits_per_trial", "must be >= 1");
    if (bench_reps < 1) fail("bench_reps", "must be >= 1");
    if (pipeline.quality.contact.contact_radius < 0.0) fail("contact_radius", "must be >= 0");
}

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) fail("config", "expected a JSON object");
    ExperimentConfig cfg;
    const auto& table = setters();
    for (const auto& [key, value] : j.items()) {
        const auto it = table.find(key);
        if (it == table.end()) fail(key, "unknown key");
        it->second(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("config", "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    const auto& p = c.pipeline;
    json modes = json::array();
    for (Mode m : c.modes) modes.push_back(to_string(m));
    auto vec = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
    return {
        {"theta_dot", p.filter.theta_dot},
        {"theta_vert", p.filter.theta_vert},
        {"tau", p.filter.tau},
        {"jaw_width", p.filter.jaw_width},
        {"jaw_len_min", p.filter.jaw_len_min},
        {"jaw_len_max", p.filter.jaw_len_max},
        {"delta_global", p.filter.delta_global},
        {"delta_local", p.filter.delta_local},
        {"front", vec(p.filter.front)},
        {"world_up", vec(p.filter.world_up)},
        {"M", p.generator.max_grasps},
        {"max_width", p.generator.max_width},
        {"standoff", p.generator.standoff},
        {"attempts_per_grasp", p.generator.attempts_per_grasp},
        {"mu", p.quality.mu},
        {"n_dir", p.quality.n_dir},
        {"march_step", p.quality.contact.step},
        {"contact_radius", p.quality.contact.contact_radius},
        {"epsilon_mode", p.quality.mode == EpsilonMode::Union ? "union" : "best_single"},
        {"base_sigma", p.sampler.base_sigma},
        {"occlusion_gain", p.sampler.occlusion_gain},
        {"n_output", p.sampler.n_output},
        {"normal_k", p.sampler.normal_k},
        {"spread", p.sampler.spread == SpreadMode::DeviationNorm ? "deviation_norm" : "mean_axis_std"},
        {"K", p.K},
        {"jaw_check_partial", p.jaw_check_partial},
        {"center_at_centroid", p.center_at_centroid},
        {"alpha_grid", c.alpha_grid},
        {"trials_per_alpha", c.trials_per_alpha},
        {"seed", c.seed},
        {"modes", modes},
        {"fruit_points", c.fruit_points},
        {"fruit_scale", c.fruit_scale},
        {"leaf_aspect", c.leaf_aspect},
        {"leaf_thickness", c.leaf_thickness},
        {"clutter_points", c.clutter_points},
        {"crop_pad", c.crop_pad},
        {"fruits_per_trial", c.fruits_per_trial},
        {"bench_points", c.bench_points},
        {"bench_reps", c.bench_reps},
        {"bench_grasps", c.bench_grasps},
        {"threads", c.threads},
        {"out_dir", c.out_dir},
    };
}

}  // namespace occgrasp
