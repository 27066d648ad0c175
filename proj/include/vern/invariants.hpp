#ifndef VERN_INVARIANTS_HPP_
#define VERN_INVARIANTS_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace vern::invariants {

/// Pliable vs non-pliable clearing values over random valid weights and
/// random (kappa, h) samples, boundary corners included.
struct SeparationStats {
  long long samples = 0;
  long long violations = 0;  // any of the three orderings broken
  double worst_margin = 0.0; // min over draws of (min NPV - max PV)
};
SeparationStats check_clearing_separation(int weight_draws, int samples_per_draw,
                                          std::uint64_t seed);

/// Analytic contrastive-loss gradient against central differences.
struct GradientStats {
  int configs = 0;
  int skipped = 0;            // within `kink_guard` of the hinge
  double max_rel_error = 0.0;
};
GradientStats check_loss_gradient(int configs, double eps, std::uint64_t seed,
                                  double kink_guard = 1e-3);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast property suites (a few seconds in total).
std::vector<SuiteResult> run_all(std::uint64_t seed);

}  // namespace vern::invariants

#endif  // VERN_INVARIANTS_HPP_
