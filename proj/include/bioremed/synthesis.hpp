#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bioremed/growth.hpp"
#include "bioremed/sim.hpp"
#include "bioremed/twocomp.hpp"

namespace bioremed {

struct ExtremalPoint {
  double s1;
  double s2;
  double gamma;
  double sr_opt;
  double time_to_go;  // NaN when loaded from disk
};

/// One candidate optimal path, integrated backward from the target boundary
/// S1 = S_target with gamma = 0. Points are ordered by increasing S1.
struct Extremal {
  double anchor;  // S2 at S1 = S_target
  std::vector<ExtremalPoint> points;
  bool reaches_diagonal = false;

  double s1_end() const { return points.back().s1; }
  /// Linear interpolation in S1; requires s1 within [S_target, s1_end()].
  ExtremalPoint at(double s1) const;
};

struct SynthesisOptions {
  std::size_t grid_size = 64;
  // Upper end of the covered S1 range; 0 selects 1.05 * S1_0.
  double s1_max = 0.0;
  double rtol = 1e-10;
  // Closest anchor to S_target, as a fraction of S_target.
  double top_anchor = 0.999;
  double bottom_anchor = 1e-3;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Optimal feedback for the two-compartment resource, assembled from a family
/// of non-crossing extremals. Immutable after construction.
class SynthesisField {
 public:
  static SynthesisField build(const TwoCompScenario& scn, const GrowthLaw& law,
                              const SynthesisOptions& opts = {});

  /// Optimal S_r at (s1, s2): S2 inside the switching set, interpolated from
  /// the bracketing extremals elsewhere. Throws ExtendFieldError above s1_max.
  double query(double s1, double s2) const;
  /// Pure interpolation between bracketing extremals (no switching-set rule).
  double query_interpolated(double s1, double s2) const;
  /// Interpolated minimal time to the target; NaN if times are unavailable
  /// (loaded bundles, or beyond the last extremal meeting the diagonal).
  double time_to_go(double s1, double s2) const;

  const std::vector<Extremal>& extremals() const { return extremals_; }
  const TwoCompScenario& scenario() const { return scn_; }
  const GrowthLaw& law() const { return law_; }
  double s1_max() const { return s1_max_; }
  double bar_s2_value() const { return bar_s2_; }

  /// Throws SynthesisError when two extremals cross or one leaves S1 >= S2.
  void check_consistency() const;

  /// Writes index.csv (anchor,file) and one S1,S2,gamma,Sr_opt file per extremal.
  void save(const std::string& dir) const;
  static SynthesisField load(const std::string& dir, const TwoCompScenario& scn,
                             const GrowthLaw& law);

 private:
  SynthesisField(TwoCompScenario scn, GrowthLaw law, std::vector<Extremal> extremals,
                 double s1_max);

  struct Bracket;
  Bracket bracket(double s1, double s2) const;

  TwoCompScenario scn_;
  GrowthLaw law_;
  std::vector<Extremal> extremals_;
  double s1_max_;
  double bar_s2_;
};

/// Anchor values of S2 at S1 = S_target, geometrically clustered near S_target.
std::vector<double> synthesis_anchors(double s_target, std::size_t n, double top_fraction,
                                      double bottom_fraction);

/// Integrates one extremal backward from (S_target, anchor, gamma = 0).
Extremal integrate_extremal(const TwoCompScenario& scn, const GrowthLaw& law, double anchor,
                            double s1_max, double rtol);

struct TwoCompOptimalRun {
  Trajectory trajectory;
  std::optional<double> switch_time;  // first entry into the switching set
  double s2_switch = 0.0;             // S2 at the switch time
};

TwoCompOptimalRun solve_optimal_twocomp(const TwoCompScenario& scn, const GrowthLaw& law,
                                        std::shared_ptr<const SynthesisField> field,
                                        const IntegrateOptions& opts = {});

}  // namespace bioremed
