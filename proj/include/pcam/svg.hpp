#pragma once

#include <string>

#include "pcam/point_cloud.hpp"

namespace pcam {

/// Three orthographic scatter projections (XY, XZ, YZ) side by side on a
/// fixed 900x300 canvas, depth-shaded. Byte output is deterministic per
/// input; a unit-norm point stays within the half-panel radius.
void export_svg(const std::string& path, const PointCloud& cloud);

std::string render_svg(const PointCloud& cloud);

}  // namespace pcam
