#include "pcam/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "pcam/errors.hpp"

namespace pcam {

namespace {

constexpr int kPanel = 300;
constexpr double kScale = kPanel / 2.0;  // one model unit = half panel

/// Depth in [-1,1] -> gray level (near = dark).
int depth_gray(double depth) {
  const double t = std::clamp((depth + 1.0) / 2.0, 0.0, 1.0);
  return static_cast<int>(40.0 + t * 160.0);
}

}  // namespace

std::string render_svg(const PointCloud& cloud) {
  if (!cloud.all_finite()) throw ContractError("export_svg: cloud has non-finite coordinates");
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"300\" viewBox=\"0 0 900 300\">\n";
  svg += "<rect width=\"900\" height=\"300\" fill=\"white\"/>\n";

  struct Panel {
    int ax;  // horizontal coordinate index
    int ay;  // vertical coordinate index
    int az;  // depth coordinate index
    const char* label;
  };
  const Panel panels[3] = {{0, 1, 2, "XY"}, {0, 2, 1, "XZ"}, {1, 2, 0, "YZ"}};

  char buf[160];
  for (int p = 0; p < 3; ++p) {
    const double cx = p * kPanel + kPanel / 2.0;
    const double cy = kPanel / 2.0;
    std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"14\" font-size=\"11\" fill=\"#666\">%s</text>\n",
                  p * kPanel + 6.0, panels[p].label);
    svg += buf;
    for (int i = 0; i < cloud.size(); ++i) {
      const auto& pt = cloud[i];
      const double x = cx + pt[static_cast<std::size_t>(panels[p].ax)] * kScale;
      // SVG y grows downward.
      const double y = cy - pt[static_cast<std::size_t>(panels[p].ay)] * kScale;
      const int g = depth_gray(pt[static_cast<std::size_t>(panels[p].az)]);
      std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.6\" fill=\"rgb(%d,%d,%d)\"/>\n", x, y,
                    g, g, g);
      svg += buf;
    }
  }
  svg += "</svg>\n";
  return svg;
}

void export_svg(const std::string& path, const PointCloud& cloud) {
  const std::string svg = render_svg(cloud);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << svg;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace pcam
