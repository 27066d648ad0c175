#ifndef VERN_GRID_HPP_
#define VERN_GRID_HPP_

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Core>

#include "vern/geometry.hpp"

namespace vern {

/// (row, col): row follows +y of the odom frame, col follows +x.
using GridIndex = Eigen::Vector2i;

/// Placement of an axis-aligned, odom-oriented grid. Cell (row, col) covers
/// origin + [col*res, (col+1)*res) x [row*res, (row+1)*res).
struct GridGeometry {
  int rows = 0;
  int cols = 0;
  double resolution = 0.1;
  Vec2 origin = Vec2::Zero();  // odom position of the lower-left corner

  /// Square grid whose center cell contains `center`; the origin snaps to
  /// multiples of the resolution so cells line up with the world raster.
  static GridGeometry centered_on(const Vec2& center, int size, double resolution) {
    GridGeometry g;
    g.rows = g.cols = size;
    g.resolution = resolution;
    const int half = size / 2;
    g.origin = Vec2((std::floor(center.x() / resolution) - half) * resolution,
                    (std::floor(center.y() / resolution) - half) * resolution);
    return g;
  }

  bool in_bounds(int row, int col) const {
    return row >= 0 && col >= 0 && row < rows && col < cols;
  }
  std::optional<GridIndex> cell_of(const Vec2& p) const {
    const int col = static_cast<int>(std::floor((p.x() - origin.x()) / resolution));
    const int row = static_cast<int>(std::floor((p.y() - origin.y()) / resolution));
    if (!in_bounds(row, col)) return std::nullopt;
    return GridIndex(row, col);
  }
  Vec2 center(int row, int col) const {
    return origin + Vec2((col + 0.5) * resolution, (row + 0.5) * resolution);
  }
  Vec2 cell_lo(int row, int col) const {
    return origin + Vec2(col * resolution, row * resolution);
  }
  /// Odom -> grid-frame transform (grid frame origin at the lower-left corner).
  FrameTransform odom_to_grid() const { return FrameTransform(-origin, 0.0); }

  bool same_as(const GridGeometry& o) const {
    return rows == o.rows && cols == o.cols && resolution == o.resolution && origin == o.origin;
  }

  /// Calls f(row, col) for every cell whose square meets the closed disc.
  template <typename F>
  void for_each_cell_in_disc(const Vec2& c, double radius, F&& f) const {
    const auto lo_idx = [&](double v, double o) {
      return static_cast<int>(std::floor((v - radius - o) / resolution));
    };
    const auto hi_idx = [&](double v, double o) {
      return static_cast<int>(std::floor((v + radius - o) / resolution));
    };
    const int c0 = std::max(0, lo_idx(c.x(), origin.x()));
    const int c1 = std::min(cols - 1, hi_idx(c.x(), origin.x()));
    const int r0 = std::max(0, lo_idx(c.y(), origin.y()));
    const int r1 = std::min(rows - 1, hi_idx(c.y(), origin.y()));
    for (int r = r0; r <= r1; ++r) {
      for (int col = c0; col <= c1; ++col) {
        const Vec2 lo = cell_lo(r, col);
        if (point_to_box_distance(c, lo, lo + Vec2::Constant(resolution)) <= radius) f(r, col);
      }
    }
  }
};

}  // namespace vern

#endif  // VERN_GRID_HPP_
