#ifndef VERN_PERCEPTION_HPP_
#define VERN_PERCEPTION_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "vern/fewshot.hpp"
#include "vern/grid.hpp"
#include "vern/world.hpp"

namespace vern::perception {

/// Forward camera wedge. Image bottom quadrants see the near band
/// [0, r1), top quadrants the far band [r1, r2); image-left is world-left.
struct CameraModel {
  double fov_deg = 90.0;
  double r1 = 2.0;
  double r2 = 4.0;
};

struct NoiseModel {
  double d_true = 0.1;   // distance to the quadrant's own class
  double d_false = 0.8;  // distance to every other class
  double sigma = 0.0;    // Gaussian jitter on every entry
  double p_mis = 0.0;    // probability the true entry swaps with another class
};

/// Q1 top-left, Q2 top-right, Q3 bottom-left, Q4 bottom-right.
inline constexpr int kNumQuadrants = 4;

struct QuadrantFootprint {
  int id = 0;  // 1..4
  std::vector<GridIndex> cells;  // cost-map (row, col)
  std::vector<Vec2> points;      // odom centers of those cells
};

using Footprints = std::array<QuadrantFootprint, kNumQuadrants>;

/// Rows: quadrants Q1..Q4. Columns: sparse grass, dense grass, bush, tree.
using PredictionMatrix = Eigen::Matrix4d;

struct QuadrantClassification {
  VegClass cls = VegClass::SparseGrass;  // argmin class
  double distance = 0.0;                 // row minimum
  double confidence = 1.0;               // exp(-alpha * distance)
  bool pliable = true;
};

using Classifications = std::array<QuadrantClassification, kNumQuadrants>;

/// Quadrant id (1..4) for a point at `bearing_right` radians (positive to
/// the right of the heading, like image x) and `range` meters; 0 when it is
/// outside the wedge or beyond r2.
int quadrant_of(double bearing_right, double range, const CameraModel& camera);

/// Assigns every cost-map cell center to at most one quadrant.
Footprints extract_footprints(const Pose2D& pose, const CameraModel& camera,
                              const GridGeometry& grid);

/// rows x cols matrix of quadrant ids (0 = outside every footprint).
Eigen::MatrixXi quadrant_mask(const Footprints& fp, const GridGeometry& grid);

/// Majority class among the vegetation cells of a footprint (ties to the
/// lower class index); Free when the footprint holds no vegetation.
VegClass dominant_class(const WorldGrid& world, const QuadrantFootprint& fp);

/// Simulated classifier: per quadrant, d_true on the dominant class and
/// d_false elsewhere, jittered and clipped to [0,1], with an occasional swap.
/// Free- and Unknown-dominated quadrants are dissimilar to every class.
PredictionMatrix classify_oracle(const WorldGrid& world, const Footprints& fp,
                                 const NoiseModel& noise, std::uint64_t seed);

/// One prediction row from the trained embedder.
Eigen::RowVector4d classify_fewshot(const fewshot::EmbedderParams& params,
                                    const Eigen::VectorXd& descriptor,
                                    const fewshot::EmbeddedReferences& refs);

/// Closed-loop few-shot backend: each quadrant is rendered as a synthetic
/// descriptor of its dominant class and run through the embedder.
class FewShotBackend {
 public:
  FewShotBackend(fewshot::EmbedderParams params, const fewshot::ReferenceSet& refs,
                 fewshot::DescriptorGenerator generator);

  PredictionMatrix classify(const WorldGrid& world, const Footprints& fp,
                            std::uint64_t seed) const;

  const fewshot::EmbedderParams& params() const { return params_; }

 private:
  fewshot::EmbedderParams params_;
  fewshot::EmbeddedReferences refs_;
  fewshot::DescriptorGenerator generator_;
};

/// argmin with ties to the lowest index; confidence exp(-alpha d).
Classifications summarize(const PredictionMatrix& m, double alpha);

/// Class column j (0-based) of the prediction matrix as a vegetation class.
constexpr VegClass class_of_column(int j) { return static_cast<VegClass>(j + 1); }

}  // namespace vern::perception

#endif  // VERN_PERCEPTION_HPP_
