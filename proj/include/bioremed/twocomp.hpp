#pragma once

#include "bioremed/growth.hpp"
#include "bioremed/homogeneous.hpp"
#include "bioremed/sim.hpp"

namespace bioremed {

/// Resource split into two compartments: the reactor pumps from compartment 1
/// and returns treated water into compartment 2.
struct TwoCompScenario {
  double v1;        // m^3
  double v2;        // m^3
  double vr;        // m^3
  double s1_0;      // mol/m^3
  double s2_0;      // mol/m^3
  double s_target;  // level S1 must reach, mol/m^3

  /// Builds V1 = p V, V2 = (1 - p) V.
  static TwoCompScenario from_fraction(double v, double p, double vr, double s1_0, double s2_0,
                                       double s_target);

  double volume() const { return v1 + v2; }
  double p() const { return v1 / (v1 + v2); }
  double alpha() const { return vr / (v1 + v2); }
  double alpha1() const { return vr / v1; }
  double alpha2() const { return vr / v2; }
  void validate() const;
};

// -- constant controls -----------------------------------------------------------

/// Normalized distance S1(t) - S_r over S0 - S_r under a constant control, as a
/// function of tau = mu(S_r) t, for equal initial concentrations.
double kernel_A(double p, double tau, double alpha);
/// d kernel_A / d tau.
double kernel_A_dtau(double p, double tau, double alpha);

/// (S_target - S_r) / (S0 - S_r).
double ratio_B(double sr, double s0, double s_target);

/// Hit time under constant S_r when S1(0) = S2(0): solves A(p, mu(S_r) T) = B(S_r).
double constant_time_twocomp(const TwoCompScenario& scn, const GrowthLaw& law, double sr);

struct TangencyOptimum {
  double sr;
  double q;
  double tf;
  // |d/dS_r [A(p, mu(S_r) T*) - B(S_r)]| at S_r*, with T* held fixed.
  double tangency_residual;
  bool unimodal;
};

/// Best constant control for equal initial concentrations.
TangencyOptimum best_constant_twocomp(const TwoCompScenario& scn, const GrowthLaw& law);

/// Best constant control for arbitrary initial data, by 1-D minimization of
/// simulated hit times. Heuristic: not characterized analytically.
ConstantOptimum best_constant_twocomp_simulated(const TwoCompScenario& scn,
                                                const GrowthLaw& law,
                                                const IntegrateOptions& opts = {});

// -- Hamiltonian machinery ----------------------------------------------------------

double phi(const GrowthLaw& law, double s1, double s2, double gamma, double sr);
double psi(const GrowthLaw& law, double s1, double s2, double gamma);
/// d phi / d S_r.
double phi_dsr(const GrowthLaw& law, double s1, double s2, double gamma, double sr);

/// Maximizer of phi(s1, s2, gamma, .) over (0, s2].
double argmax_phi(const GrowthLaw& law, double s1, double s2, double gamma);

// -- switching set -----------------------------------------------------------------

double switching_beta(double alpha1, double alpha2);
double switching_f0(double alpha1, double alpha2, double s_target, double s1_0, double s2_0);

/// Root of mu(s) = beta mu'(s) (S_target - s) on (0, S_target).
double bar_s2(const TwoCompScenario& scn, const GrowthLaw& law);
double bar_s2_monod(double K, double beta, double s_target);

/// Membership of (s1_0, s2_0) in the set where holding S_r = S2 is optimal.
/// Requires s1_0 > S_target > s2_0 > 0.
bool switching_set_contains(double s1_0, double s2_0, const TwoCompScenario& scn,
                            const GrowthLaw& law);
/// Non-throwing variant: false outside (S_target, inf) x (0, S_target).
bool in_switching_set(double s1, double s2, const TwoCompScenario& scn, const GrowthLaw& law,
                      double bar_s2_value);

// -- identification ------------------------------------------------------------------

struct Alpha2Estimate {
  double alpha2;
  bool one_compartment_suits;  // |alpha2 - alpha| / alpha < 10%
};

/// Inverts dS2/dt(0) = alpha2 mu(S_r)(S_r - S2(0)).
Alpha2Estimate estimate_alpha2(double s2_slope_0, double s2_0, double sr_applied,
                               const GrowthLaw& law, double alpha_reference);

// -- simulation helpers ----------------------------------------------------------------

ControlledSystem twocomp_system(const TwoCompScenario& scn, const GrowthLaw& law);
TargetFunction twocomp_target(const TwoCompScenario& scn);
double default_horizon(const TwoCompScenario& scn, const GrowthLaw& law);

Trajectory simulate_constant_twocomp(const TwoCompScenario& scn, const GrowthLaw& law,
                                     double sr, const IntegrateOptions& opts = {});

/// Homogeneous optimal feedback applied to a single measurement (1: S1, 2: S2),
/// clamped to (0, S2].
Trajectory simulate_single_measurement_feedback(const TwoCompScenario& scn,
                                                const GrowthLaw& law, int measured,
                                                const IntegrateOptions& opts = {});

}  // namespace bioremed
