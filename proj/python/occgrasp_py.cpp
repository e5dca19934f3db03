#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "occgrasp/config.hpp"
#include "occgrasp/decision.hpp"
#include "occgrasp/errors.hpp"
#include "occgrasp/harness.hpp"
#include "occgrasp/occlusion.hpp"
#include "occgrasp/quality.hpp"

namespace py = pybind11;
using namespace occgrasp;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

PointCloud to_cloud(const RowMatrix& points, const std::optional<RowMatrix>& normals) {
    PointCloud c;
    c.points.reserve(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) c.points.emplace_back(points.row(i).transpose());
    if (normals) {
        if (normals->rows() != points.rows()) throw py::value_error("normals must match points in shape");
        for (Eigen::Index i = 0; i < normals->rows(); ++i) c.normals.emplace_back(normals->row(i).transpose());
    }
    return c;
}

RowMatrix to_matrix(const std::vector<Vec3>& v) {
    RowMatrix m(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    return m;
}

ExperimentConfig config_from(const py::object& cfg) {
    if (cfg.is_none()) return {};
    const std::string text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
    return parse_config(nlohmann::json::parse(text));
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_occgrasp, m) {
    m.doc() = "Grasp feasibility and LCB abstention for occluded fruit point clouds.";

    py::register_exception<Error>(m, "OccgraspError");

    m.def("z_schedule", &z_schedule, py::arg("alpha"));

    m.def(
        "lcb_stats",
        [](const std::vector<double>& eps, double z) {
            const EpsilonStats s = lcb_stats(eps, z);
            py::dict d;
            d["mean"] = s.mean;
            d["std"] = s.std;
            d["z"] = s.z;
            d["lcb"] = s.lcb;
            return d;
        },
        py::arg("eps"), py::arg("z"));

    m.def(
        "epsilon_hull",
        [](const Eigen::Matrix<double, 6, Eigen::Dynamic>& columns) {
            WrenchSet w;
            for (Eigen::Index i = 0; i < columns.cols(); ++i) w.columns.push_back(columns.col(i));
            return epsilon_hull(w).epsilon;
        },
        py::arg("columns"), "Epsilon margin of the convex hull of 6 x N wrench columns.");

    m.def(
        "generate_strawberry",
        [](std::uint64_t seed, std::size_t n_points, double scale) {
            const PointCloud c = generate_strawberry(seed, n_points, scale);
            return py::make_tuple(to_matrix(c.points), to_matrix(c.normals));
        },
        py::arg("seed"), py::arg("n_points"), py::arg("scale"), "Returns (points, normals) as N x 3 arrays.");

    m.def(
        "occlude",
        [](const RowMatrix& points, double alpha, double aspect, double thickness, std::uint64_t seed) {
            const PointCloud cloud = to_cloud(points, std::nullopt);
            const OcclusionOutcome out = apply_leaf(cloud, place_leaf(cloud, alpha, aspect, thickness, seed));
            return py::make_tuple(to_matrix(out.occluded_cloud.points), out.removed_fraction);
        },
        py::arg("points"), py::arg("alpha"), py::arg("aspect") = 0.6, py::arg("thickness") = 0.01,
        py::arg("seed") = 0, "Returns (kept points, removed fraction).");

    m.def(
        "decide",
        [](const RowMatrix& partial, const std::optional<RowMatrix>& shape, const std::string& mode, double alpha,
           const py::object& config, std::uint64_t seed) {
            const ExperimentConfig cfg = config_from(config);
            ObjectInput obj;
            obj.partial = to_cloud(partial, std::nullopt);
            obj.shape = shape ? to_cloud(*shape, std::nullopt) : obj.partial;
            obj.alpha = alpha;
            return json_to_py(to_json(decide(obj, parse_mode(mode), cfg.pipeline, seed)));
        },
        py::arg("partial"), py::arg("shape") = py::none(), py::arg("mode") = "Dropout", py::arg("alpha") = 0.0,
        py::arg("config") = py::none(), py::arg("seed") = 0, "Decision report as a dict.");

    m.def(
        "default_config", [] { return json_to_py(to_json(ExperimentConfig{})); },
        "Every configuration key with its default value.");

    m.def(
        "run_sweep",
        [](const py::object& config, const std::string& out_dir) {
            const ExperimentConfig cfg = config_from(config);
            SweepReport report;
            {
                py::gil_scoped_release release;
                report = run_sweep(cfg);
                if (!out_dir.empty()) write_sweep(report, cfg, out_dir);
            }
            return aggregate_csv(report.aggregates);
        },
        py::arg("config") = py::none(), py::arg("out_dir") = "", "Runs a sweep; returns the aggregate CSV text.");
}
