#include "occgrasp/grasp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "occgrasp/errors.hpp"
#include "occgrasp/io.hpp"
#include "occgrasp/random.hpp"

namespace occgrasp {

bool GraspPose::is_valid(double tol) const {
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol && score >= 0.0 &&
           score <= 1.0;
}

Mat3 grasp_frame(const Vec3& jaw_axis, const Vec3& front) {
    const Vec3 x = jaw_axis.normalized();
    Vec3 a = front - front.dot(x) * x;
    if (a.norm() < 1e-12) {
        // Front is parallel to the jaw axis: fall back to the least-aligned unit axis.
        int axis = 0;
        x.cwiseAbs().minCoeff(&axis);
        const Vec3 e = Vec3::Unit(axis);
        a = e - e.dot(x) * x;
    }
    a.normalize();
    const Vec3 y = a.cross(x);
    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = a;
    return r;
}

std::vector<GraspPose> generate_grasps(const PointCloud& cloud, const GraspGenConfig& cfg,
                                       std::uint64_t seed) {
    if (!cloud.has_normals()) throw Error(ErrorCode::MissingNormals, "generate_grasps needs normals");
    const std::size_t n = cloud.size();
    if (n < 2 || cfg.max_grasps == 0) return {};

    const double cos_cone = 1.0 / std::sqrt(1.0 + cfg.mu * cfg.mu);  // cos(arctan mu)
    const std::size_t attempts = cfg.attempts_per_grasp * cfg.max_grasps;
    Rng rng(derive_seed({seed, 0x6e47ULL}));

    struct Candidate {
        GraspPose pose;
        std::size_t order;
    };
    std::vector<Candidate> found;
    std::unordered_set<std::uint64_t> seen;

    for (std::size_t t = 0; t < attempts; ++t) {
        std::size_t i = rng.below(n), j = rng.below(n);
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        if (!seen.insert(static_cast<std::uint64_t>(i) * n + j).second) continue;

        const Vec3& p = cloud.points[i];
        const Vec3& q = cloud.points[j];
        const Vec3 chord = q - p;
        const double len = chord.norm();
        if (len <= 0.0 || len > cfg.max_width) continue;
        const Vec3 x = chord / len;
        // Outward normals: the jaw at p pushes along +x, the jaw at q along -x.
        const double cos_p = -cloud.normals[i].dot(x);
        const double cos_q = cloud.normals[j].dot(x);
        if (cos_p < cos_cone || cos_q < cos_cone) continue;

        GraspPose g;
        g.rotation = grasp_frame(x, cfg.front);
        g.center = 0.5 * (p + q) - cfg.standoff * g.approach();
        g.score = std::clamp(0.5 * (cos_p + cos_q), 0.0, 1.0);
        found.push_back({g, found.size()});
    }

    std::stable_sort(found.begin(), found.end(),
                     [](const Candidate& a, const Candidate& b) { return a.pose.score > b.pose.score; });
    if (found.size() > cfg.max_grasps) found.resize(cfg.max_grasps);
    std::vector<GraspPose> out;
    out.reserve(found.size());
    for (const auto& c : found) out.push_back(c.pose);
    return out;
}

GraspPose transform(const GraspPose& g, const Mat3& rotation, const Vec3& translation) {
    GraspPose out = g;
    out.rotation = rotation * g.rotation;
    out.center = rotation * g.center + translation;
    return out;
}

void write_grasps_csv(std::ostream& out, std::span<const GraspPose> grasps) {
    out << "r00,r01,r02,r10,r11,r12,r20,r21,r22,cx,cy,cz,score\n";
    for (const GraspPose& g : grasps) {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out << io::format_double(g.rotation(r, c)) << ',';
        for (int k = 0; k < 3; ++k) out << io::format_double(g.center[k]) << ',';
        out << io::format_double(g.score) << '\n';
    }
}

std::vector<GraspPose> read_grasps_csv(std::istream& in) {
    std::vector<GraspPose> out;
    std::string line;
    if (!std::getline(in, line)) return out;  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double v[13];
        int k = 0;
        while (k < 13 && std::getline(ss, cell, ',')) {
            const char* end = cell.data() + cell.size();
            const auto [ptr, ec] = std::from_chars(cell.data(), end, v[k]);
            if (ec != std::errc() || ptr != end)
                throw Error(ErrorCode::ParseError, "grasp CSV: bad number '" + cell + "'");
            ++k;
        }
        if (k != 13 || std::getline(ss, cell, ','))
            throw Error(ErrorCode::ParseError, "grasp CSV row needs 13 fields");
        GraspPose g;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) g.rotation(r, c) = v[3 * r + c];
        g.center = {v[9], v[10], v[11]};
        g.score = v[12];
        out.push_back(g);
    }
    return out;
}

}  // namespace occgrasp
