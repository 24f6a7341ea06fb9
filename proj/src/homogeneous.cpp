#include "bioremed/homogeneous.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bioremed/errors.hpp"
#include "bioremed/scalar.hpp"

namespace bioremed {

void HomogeneousScenario::validate() const {
  if (!(v > 0.0) || !(vr > 0.0)) throw std::invalid_argument("volumes must be positive");
  if (!(s_target > 0.0)) throw std::invalid_argument("S_target must be positive");
  if (!(s_target < s0)) throw std::invalid_argument("S_target must be below S0");
}

std::vector<std::string> HomogeneousScenario::warnings() const {
  std::vector<std::string> w;
  if (v / vr < 100.0) {
    std::ostringstream os;
    os << "V/V_r = " << v / vr << " < 100: quasi-steady-state reduction may be inaccurate";
    w.push_back(os.str());
  }
  return w;
}

double tf_constant(const HomogeneousScenario& scn, const GrowthLaw& law, double sr) {
  if (!(sr > 0.0 && sr < scn.s_target)) {
    throw DomainError("tf_constant: S_r must lie in (0, S_target)");
  }
  return std::log((scn.s0 - sr) / (scn.s_target - sr)) / (scn.alpha() * law.mu(sr));
}

double tf_constant_or_inf(const HomogeneousScenario& scn, const GrowthLaw& law, double sr) {
  if (!(sr > 0.0 && sr < scn.s_target)) return std::numeric_limits<double>::infinity();
  return tf_constant(scn, law, sr);
}

ConstantOptimum best_constant(const HomogeneousScenario& scn, const GrowthLaw& law) {
  scn.validate();
  const auto m = minimize_guarded(
      [&](double sr) { return tf_constant_or_inf(scn, law, sr); }, 0.0, scn.s_target,
      1e-10 * scn.s_target);
  return {m.x, sr_to_q(law, m.x, scn.vr), m.fx, m.unimodal()};
}

double feedback_optimal_bisection(const GrowthLaw& law, double sl) {
  if (!(sl > 0.0)) throw DomainError("feedback_optimal: S_l must be positive");
  // mu'(s)(S_l - s) - mu(s) is decreasing and changes sign on (0, S_l).
  return bisect_root([&](double s) { return law.mu_prime(s) * (sl - s) - law.mu(s); },
                     1e-12 * sl, sl * (1.0 - 1e-12), 1e-15 * sl, 400);
}

double feedback_optimal(const GrowthLaw& law, double sl) {
  if (!(sl > 0.0)) throw DomainError("feedback_optimal: S_l must be positive");
  if (law.is_linear()) return 0.5 * sl;
  if (law.is_monod()) {
    const double K = std::get<MonodParams>(law.params()).K;
    // sqrt(K^2 + K S_l) - K, written without cancellation.
    return K * sl / (std::sqrt(K * K + K * sl) + K);
  }
  return feedback_optimal_bisection(law, sl);
}

ControlledSystem homogeneous_system(const HomogeneousScenario& scn, const GrowthLaw& law) {
  return homogeneous_system(scn.alpha(), scn.vr, law);
}

TargetFunction homogeneous_target(const HomogeneousScenario& scn) {
  const double st = scn.s_target;
  return [st](const State& x) { return x[0] - st; };
}

double default_horizon(const HomogeneousScenario& scn, const GrowthLaw& law) {
  return 100.0 * best_constant(scn, law).tf;
}

Trajectory simulate_constant(const HomogeneousScenario& scn, const GrowthLaw& law, double sr,
                             const IntegrateOptions& opts) {
  scn.validate();
  const double horizon = 10.0 * tf_constant(scn, law, sr);
  return integrate(homogeneous_system(scn, law), ConstantControl{sr}, State{scn.s0},
                   homogeneous_target(scn), horizon, opts);
}

Trajectory solve_feedback(const HomogeneousScenario& scn, const GrowthLaw& law,
                          const IntegrateOptions& opts) {
  scn.validate();
  StateFeedback fb{[law](const State& x) { return feedback_optimal(law, x[0]); }};
  return integrate(homogeneous_system(scn, law), fb, State{scn.s0}, homogeneous_target(scn),
                   default_horizon(scn, law), opts);
}

}  // namespace bioremed
