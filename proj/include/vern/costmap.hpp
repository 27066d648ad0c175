#ifndef VERN_COSTMAP_HPP_
#define VERN_COSTMAP_HPP_

#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vern/grid.hpp"
#include "vern/perception.hpp"
#include "vern/world.hpp"

namespace vern::costmap {

inline constexpr double kOccupied = 100.0;
inline constexpr double kCriticalMax = 300.0;
/// Sentinel for cells that must never be entered.
inline constexpr double kMaxCost = std::numeric_limits<double>::max();

/// Robot-centered, odom-aligned grid of cell costs.
struct CostMap {
  GridGeometry geometry;
  Eigen::MatrixXd values;  // rows x cols

  CostMap() = default;
  explicit CostMap(const GridGeometry& g, double fill = 0.0)
      : geometry(g), values(Eigen::MatrixXd::Constant(g.rows, g.cols, fill)) {}

  double operator()(int row, int col) const { return values(row, col); }
  double& operator()(int row, int col) { return values(row, col); }
};

struct ClearingWeights {
  double w_s = 1.0;    // sparse grass
  double w_d = 2.0;    // dense grass
  double w_npv = 1.0;
  double b_npv = 4.0;

  /// Throws ConfigError unless all weights are positive, w_d > w_s and
  /// b_npv > w_d + 1.
  void validate() const;
  /// Largest value clear_value can take.
  double normalizer() const { return w_npv + b_npv + 1.0; }
  /// Normalized cost of the cheapest non-pliable cell; pliable cells stay below.
  double admissibility_threshold() const { return b_npv / normalizer() * kOccupied; }
};

/// Binary layer: the cell under each beam endpoint with a hit becomes 100.
CostMap build_layer(const ScanLayer& scan, const GridGeometry& grid);

/// Element-wise low + mid + high. Throws std::invalid_argument on a
/// geometry mismatch.
CostMap critical_sum(const CostMap& low, const CostMap& mid, const CostMap& high);

/// mean(crit over footprint) / 300 * pi/2, or 0 for an empty footprint.
double height_measure(const CostMap& crit, const perception::QuadrantFootprint& fp);

/// Pliable: w * (1 - kappa) + 2h/pi with w = w_s or w_d.
/// Non-pliable: w_npv * kappa + b_npv + sin(h).
double clear_value(const perception::QuadrantClassification& c, double h,
                   const ClearingWeights& w);

struct QuadrantClearing {
  const perception::QuadrantFootprint* footprint = nullptr;
  perception::QuadrantClassification classification;
  double height = 0.0;
};

/// Scales low-layer cells inside each footprint by clear_value / normalizer.
/// Cells outside every footprint, and MAX cells, are copied unchanged.
CostMap apply_clearing(const CostMap& low, std::span<const QuadrantClearing> quadrants,
                       const ClearingWeights& w);

/// Stamps kMaxCost on every cell meeting the disc of `inflation` meters
/// around the odom point. Returns false when no such cell is on the grid.
bool mark_unsafe(CostMap& map, const Vec2& location, double inflation);

/// Re-stamps a persistent odom-frame list; returns how many were on the grid.
int stamp_unsafe(CostMap& map, std::span<const Vec2> locations, double inflation);

/// Soft ring around stamped spots: cost falls linearly from `peak` at the
/// stamp edge to 0 at `halo` meters beyond it. Raises cells, never lowers
/// them, and leaves MAX cells alone. Keep `peak` under the admissibility
/// threshold so the ring only shapes the objective.
void inflate_unsafe(CostMap& map, std::span<const Vec2> locations, double inflation, double halo,
                    double peak);

/// Header line "vern-costmap 1", then "rows cols resolution origin_x origin_y",
/// then one line per row (row 0 first). kMaxCost is written as MAX.
std::string to_text(const CostMap& map);
CostMap from_text(const std::string& text);
void save(const CostMap& map, const std::string& path);

}  // namespace vern::costmap

#endif  // VERN_COSTMAP_HPP_
