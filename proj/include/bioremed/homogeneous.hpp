#pragma once

#include <string>
#include <vector>

#include "bioremed/growth.hpp"
#include "bioremed/sim.hpp"

namespace bioremed {

/// Uniformly mixed resource of volume v treated through a reactor of volume vr.
struct HomogeneousScenario {
  double v;         // m^3
  double vr;        // m^3
  double s0;        // initial concentration, mol/m^3
  double s_target;  // level to reach, mol/m^3

  double alpha() const { return vr / v; }
  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
  /// Non-fatal remarks (e.g. V/V_r below 100 weakens the quasi-steady-state reduction).
  std::vector<std::string> warnings() const;
};

/// Time to reach s_target under constant S_r. Throws DomainError unless
/// 0 < S_r < s_target.
double tf_constant(const HomogeneousScenario& scn, const GrowthLaw& law, double sr);
/// Same as tf_constant but +infinity outside the open interval.
double tf_constant_or_inf(const HomogeneousScenario& scn, const GrowthLaw& law, double sr);

struct ConstantOptimum {
  double sr;  // S_r*
  double q;   // Q* = V_r mu(S_r*)
  double tf;  // T_f(S_r*)
  bool unimodal = true;
};

/// Best constant control: minimizer of tf_constant on (0, s_target).
ConstantOptimum best_constant(const HomogeneousScenario& scn, const GrowthLaw& law);

/// Maximizer of s -> mu(s)(S_l - s) on (0, S_l); closed forms for Monod and linear.
double feedback_optimal(const GrowthLaw& law, double sl);
/// Generic route: bisection on mu'(s)(S_l - s) - mu(s).
double feedback_optimal_bisection(const GrowthLaw& law, double sl);

ControlledSystem homogeneous_system(const HomogeneousScenario& scn, const GrowthLaw& law);
TargetFunction homogeneous_target(const HomogeneousScenario& scn);

/// Default horizon: generous multiple of the best-constant time.
double default_horizon(const HomogeneousScenario& scn, const GrowthLaw& law);

Trajectory simulate_constant(const HomogeneousScenario& scn, const GrowthLaw& law, double sr,
                             const IntegrateOptions& opts = {});
/// Simulates the optimal feedback until S_l <= s_target.
Trajectory solve_feedback(const HomogeneousScenario& scn, const GrowthLaw& law,
                          const IntegrateOptions& opts = {});

}  // namespace bioremed
