#include "occgrasp/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "occgrasp/errors.hpp"

namespace occgrasp::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_double(std::string_view tok, const std::filesystem::path& path, std::size_t line_no) {
    double v = 0.0;
    // from_chars accepts "nan"/"inf" but not a leading '+'.
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) +
                                               ": bad number '" + std::string(tok) + "'");
    return v;
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

PointCloud read_xyz(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    PointCloud cloud;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const auto toks = split_ws(std::string_view(line).substr(0, hash));
        if (toks.empty()) continue;
        if (toks.size() < 3)
            throw Error(ErrorCode::ParseError,
                        path.string() + ":" + std::to_string(line_no) + ": expected 'x y z'");
        cloud.points.emplace_back(parse_double(toks[0], path, line_no),
                                  parse_double(toks[1], path, line_no),
                                  parse_double(toks[2], path, line_no));
    }
    return cloud;
}

PointCloud read_ply(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next() || line != "ply") throw Error(ErrorCode::ParseError, path.string() + ": missing 'ply' magic");

    std::size_t vertex_count = 0;
    bool in_vertex = false, seen_vertex = false, ascii = false;
    std::vector<std::string> props;
    while (true) {
        if (!next()) throw Error(ErrorCode::ParseError, path.string() + ": unterminated header");
        const auto toks = split_ws(line);
        if (toks.empty() || toks[0] == "comment" || toks[0] == "obj_info") continue;
        if (toks[0] == "end_header") break;
        if (toks[0] == "format") {
            if (toks.size() < 2 || toks[1] != "ascii")
                throw Error(ErrorCode::UnsupportedFormat,
                            path.string() + ": only ascii PLY is supported");
            ascii = true;
        } else if (toks[0] == "element") {
            if (toks.size() < 3) throw Error(ErrorCode::ParseError, path.string() + ": bad element line");
            if (toks[1] != "vertex" || seen_vertex)
                throw Error(ErrorCode::UnsupportedFormat,
                            path.string() + ": only a single vertex element is supported");
            in_vertex = seen_vertex = true;
            vertex_count = static_cast<std::size_t>(parse_double(toks[2], path, line_no));
        } else if (toks[0] == "property") {
            if (!in_vertex) throw Error(ErrorCode::ParseError, path.string() + ": property outside element");
            if (toks.size() < 3 || toks[1] == "list")
                throw Error(ErrorCode::UnsupportedFormat, path.string() + ": list properties unsupported");
            props.emplace_back(toks[2]);
            const std::string_view type = toks[1];
            const bool is_coord = props.back() == "x" || props.back() == "y" || props.back() == "z";
            if (is_coord && type != "float" && type != "float32" && type != "double" && type != "float64")
                throw Error(ErrorCode::UnsupportedFormat,
                            path.string() + ": coordinate type '" + std::string(type) + "' unsupported");
        }
    }
    if (!ascii) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": missing format line");

    auto column = [&](const char* name) -> int {
        for (std::size_t i = 0; i < props.size(); ++i)
            if (props[i] == name) return static_cast<int>(i);
        return -1;
    };
    const std::array<int, 3> xyz{column("x"), column("y"), column("z")};
    const std::array<int, 3> nxyz{column("nx"), column("ny"), column("nz")};
    if (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0)
        throw Error(ErrorCode::ParseError, path.string() + ": vertex lacks x/y/z");
    const bool with_normals = nxyz[0] >= 0 && nxyz[1] >= 0 && nxyz[2] >= 0;

    PointCloud cloud;
    cloud.points.reserve(vertex_count);
    for (std::size_t v = 0; v < vertex_count; ++v) {
        if (!next()) throw Error(ErrorCode::ParseError, path.string() + ": truncated vertex data");
        const auto toks = split_ws(line);
        if (toks.size() < props.size())
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": short vertex row");
        cloud.points.emplace_back(parse_double(toks[xyz[0]], path, line_no),
                                  parse_double(toks[xyz[1]], path, line_no),
                                  parse_double(toks[xyz[2]], path, line_no));
        if (with_normals)
            cloud.normals.emplace_back(parse_double(toks[nxyz[0]], path, line_no),
                                       parse_double(toks[nxyz[1]], path, line_no),
                                       parse_double(toks[nxyz[2]], path, line_no));
    }
    return cloud;
}

PointCloud read_cloud(const std::filesystem::path& path) {
    if (path.extension() == ".ply") return read_ply(path);
    return read_xyz(path);
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out = open_out(path);
    for (const Vec3& p : cloud.points)
        out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out = open_out(path);
    const bool normals = cloud.has_normals();
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << '\n'
        << "property double x\nproperty double y\nproperty double z\n";
    if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z());
        if (normals) {
            const Vec3& n = cloud.normals[i];
            out << ' ' << format_double(n.x()) << ' ' << format_double(n.y()) << ' ' << format_double(n.z());
        }
        out << '\n';
    }
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    if (path.extension() == ".ply") write_ply(path, cloud);
    else write_xyz(path, cloud);
}

}  // namespace occgrasp::io
