#pragma once

#include <filesystem>
#include <string>

#include "occgrasp/geom.hpp"

namespace occgrasp::io {

/// One "x y z" triple per line; '#' comments and blank lines are skipped.
/// Extra columns are ignored.
PointCloud read_xyz(const std::filesystem::path& path);

/// ASCII PLY with a single vertex element whose x/y/z properties are
/// float/float32/double/float64. nx/ny/nz, when all present, become normals.
/// Binary encodings and non-vertex elements raise UnsupportedFormat.
PointCloud read_ply(const std::filesystem::path& path);

/// Dispatches on extension: ".ply" goes to read_ply, anything else to read_xyz.
PointCloud read_cloud(const std::filesystem::path& path);

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);

/// Locale-independent shortest round-trip formatting ('.' decimal separator).
std::string format_double(double v);

}  // namespace occgrasp::io
