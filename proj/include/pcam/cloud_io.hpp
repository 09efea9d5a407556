#pragma once

#include <string>

#include "pcam/point_cloud.hpp"

namespace pcam {

/// ASCII PLY (element vertex, double properties x y z). Coordinates are
/// written with enough digits for an exact decimal round trip.
void save_cloud_ply(const std::string& path, const PointCloud& cloud);
PointCloud load_cloud_ply(const std::string& path);

/// Raw binary: magic "PCAM", version u32, point count u32, then n*3
/// little-endian doubles. Round trip is bit-exact.
void save_cloud_binary(const std::string& path, const PointCloud& cloud);
PointCloud load_cloud_binary(const std::string& path);

/// Dispatch on extension: ".ply" or ".pcam".
void save_cloud(const std::string& path, const PointCloud& cloud);
PointCloud load_cloud(const std::string& path);

}  // namespace pcam
