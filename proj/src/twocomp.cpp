#include "bioremed/twocomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bioremed/errors.hpp"
#include "bioremed/scalar.hpp"

namespace bioremed {

namespace {
// Below this distance from 1/2 the (0, 1/2) branch of kernel_A loses digits
// to the 1/(1 - 2p) cancellation; a second-order expansion is used instead.
constexpr double kHalfSwitch = 1e-4;
constexpr double kEqualAlphaRel = 1e-10;

bool equal_alphas(double a1, double a2) { return std::abs(a1 - a2) / a2 < kEqualAlphaRel; }
}  // namespace

TwoCompScenario TwoCompScenario::from_fraction(double v, double p, double vr, double s1_0,
                                               double s2_0, double s_target) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  return {p * v, (1.0 - p) * v, vr, s1_0, s2_0, s_target};
}

void TwoCompScenario::validate() const {
  if (!(v1 > 0.0) || !(v2 > 0.0) || !(vr > 0.0)) {
    throw std::invalid_argument("volumes must be positive");
  }
  if (!(s_target > 0.0)) throw std::invalid_argument("S_target must be positive");
  if (!(s2_0 > 0.0)) throw std::invalid_argument("S2_0 must be positive");
  if (!(s1_0 >= s2_0)) throw std::invalid_argument("initial state must satisfy S1_0 >= S2_0");
  if (!(s1_0 > s_target)) throw std::invalid_argument("S1_0 must be above S_target");
}

// -- kernel ------------------------------------------------------------------------

double kernel_A(double p, double tau, double alpha) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("kernel_A: p must lie in [0, 1]");
  if (!(tau >= 0.0)) throw DomainError("kernel_A: tau must be non-negative");
  if (p > 0.5) p = 1.0 - p;
  const double x = alpha * tau;
  if (p == 0.0) return std::exp(-x);
  if (0.5 - p < kHalfSwitch) {
    const double d = 1.0 - 2.0 * p;
    return std::exp(-2.0 * x) *
           (1.0 + 2.0 * x + (4.0 / 3.0) * x * x * (x - 1.5) * d * d);
  }
  const double q = 1.0 - p;
  return (q * std::exp(-x / q) - p * std::exp(-x / p)) / (1.0 - 2.0 * p);
}

double kernel_A_dtau(double p, double tau, double alpha) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("kernel_A: p must lie in [0, 1]");
  if (!(tau >= 0.0)) throw DomainError("kernel_A: tau must be non-negative");
  if (p > 0.5) p = 1.0 - p;
  const double x = alpha * tau;
  if (p == 0.0) return -alpha * std::exp(-x);
  if (0.5 - p < kHalfSwitch) {
    const double d = 1.0 - 2.0 * p;
    return alpha * std::exp(-2.0 * x) *
           (-4.0 * x + (4.0 / 3.0) * d * d * (-2.0 * x * x * x + 6.0 * x * x - 3.0 * x));
  }
  const double q = 1.0 - p;
  return alpha * (std::exp(-x / p) - std::exp(-x / q)) / (1.0 - 2.0 * p);
}

double ratio_B(double sr, double s0, double s_target) {
  if (!(sr > 0.0 && sr < s_target && s_target < s0)) {
    throw DomainError("ratio_B: requires 0 < S_r < S_target < S0");
  }
  return (s_target - sr) / (s0 - sr);
}

namespace {

double solve_tau(double p, double alpha, double b) {
  // A(p, .) decreases from 1 to 0.
  double hi = 1.0 / alpha;
  while (kernel_A(p, hi, alpha) > b) {
    hi *= 2.0;
    if (!std::isfinite(hi) || hi > 1e300) throw NumericError("kernel_A root: bracket failure");
  }
  return bisect_root([&](double tau) { return kernel_A(p, tau, alpha) - b; }, 0.0, hi, 1e-15,
                     400, /*relative=*/true);
}

void require_equal_initial(const TwoCompScenario& scn) {
  if (scn.s1_0 != scn.s2_0) {
    throw DomainError("constant-control tangency requires S1_0 == S2_0");
  }
}

// d/dS_r [A(p, mu(S_r) T) - B(S_r)] at fixed T.
double tangency_slope(const TwoCompScenario& scn, const GrowthLaw& law, double sr, double t) {
  const double s0 = scn.s1_0;
  const double db = (scn.s_target - s0) / ((s0 - sr) * (s0 - sr));
  return kernel_A_dtau(scn.p(), law.mu(sr) * t, scn.alpha()) * law.mu_prime(sr) * t - db;
}

}  // namespace

double constant_time_twocomp(const TwoCompScenario& scn, const GrowthLaw& law, double sr) {
  require_equal_initial(scn);
  const double b = ratio_B(sr, scn.s1_0, scn.s_target);
  return solve_tau(scn.p(), scn.alpha(), b) / law.mu(sr);
}

TangencyOptimum best_constant_twocomp(const TwoCompScenario& scn, const GrowthLaw& law) {
  scn.validate();
  require_equal_initial(scn);
  const double st = scn.s_target;
  auto time = [&](double sr) {
    if (!(sr > 0.0 && sr < st)) return std::numeric_limits<double>::infinity();
    return constant_time_twocomp(scn, law, sr);
  };
  const auto m = minimize_guarded(time, 0.0, st, 1e-10 * st);
  double sr = m.x;

  // The tangency condition vanishes exactly where dT/dS_r does; polishing on it
  // recovers the digits golden-section loses on the flat minimum.
  auto slope = [&](double s) { return tangency_slope(scn, law, s, time(s)); };
  const double w = 1e-6 * st;
  const double lo = std::max(sr - w, 1e-3 * w);
  const double hi = std::min(sr + w, st - 1e-3 * w);
  if (std::signbit(slope(lo)) != std::signbit(slope(hi))) {
    const double polished = bisect_root(slope, lo, hi, 1e-15 * st, 200);
    if (time(polished) <= m.fx * (1.0 + 1e-12)) sr = polished;
  }
  const double tf = time(sr);
  return {sr, sr_to_q(law, sr, scn.vr), tf, std::abs(tangency_slope(scn, law, sr, tf)),
          m.unimodal()};
}

// -- Hamiltonian ----------------------------------------------------------------------

namespace {
void require_separated(double s1, double s2) {
  if (!(s1 > s2)) throw DomainError("phi/psi: singular at S1 == S2 (requires S1 > S2)");
  if (!(s2 > 0.0)) throw DomainError("phi/psi: requires S2 > 0");
}
}  // namespace

double phi(const GrowthLaw& law, double s1, double s2, double gamma, double sr) {
  require_separated(s1, s2);
  return law.mu(sr) * (1.0 + gamma * (s2 - sr) / (s1 - s2));
}

double psi(const GrowthLaw& law, double s1, double s2, double gamma) {
  require_separated(s1, s2);
  return law.mu_prime(s2) - gamma * law.mu(s2) / (s1 - s2);
}

double phi_dsr(const GrowthLaw& law, double s1, double s2, double gamma, double sr) {
  require_separated(s1, s2);
  const double d = s1 - s2;
  return law.mu_prime(sr) * (1.0 + gamma * (s2 - sr) / d) - gamma * law.mu(sr) / d;
}

double argmax_phi(const GrowthLaw& law, double s1, double s2, double gamma) {
  require_separated(s1, s2);
  if (!(gamma >= 0.0)) throw DomainError("argmax_phi: gamma must be non-negative");
  if (psi(law, s1, s2, gamma) >= 0.0) return s2;
  // phi is strictly concave in S_r: its derivative decreases from > 0 at 0
  // to psi < 0 at S2.
  return bisect_root([&](double sr) { return phi_dsr(law, s1, s2, gamma, sr); }, 0.0, s2,
                     1e-12 * s2, 200);
}

// -- switching set -----------------------------------------------------------------------

double switching_beta(double alpha1, double alpha2) {
  if (equal_alphas(alpha1, alpha2)) return std::exp(1.0);
  return std::pow(alpha1 / alpha2, alpha1 / (alpha1 - alpha2));
}

double switching_f0(double alpha1, double alpha2, double s_target, double s1_0, double s2_0) {
  const double d0 = s1_0 - s2_0;
  const double log_ratio = std::log(d0 / (s_target - s2_0));
  if (equal_alphas(alpha1, alpha2)) return log_ratio / d0;
  const double e = (alpha1 - alpha2) / alpha1;
  return alpha2 * (-std::expm1(e * log_ratio)) / ((alpha2 - alpha1) * d0);
}

double bar_s2_monod(double K, double beta, double s_target) {
  const double b = K * (1.0 + beta);
  return 0.5 * (-b + std::sqrt(b * b + 4.0 * K * beta * s_target));
}

double bar_s2(const TwoCompScenario& scn, const GrowthLaw& law) {
  const double beta = switching_beta(scn.alpha1(), scn.alpha2());
  const double st = scn.s_target;
  return bisect_root(
      [&](double s) { return law.mu(s) - beta * law.mu_prime(s) * (st - s); }, 0.0, st,
      1e-15 * st, 400);
}

bool in_switching_set(double s1, double s2, const TwoCompScenario& scn, const GrowthLaw& law,
                      double bar_s2_value) {
  const double st = scn.s_target;
  if (!(s1 > st && s2 > 0.0 && s2 < st && s1 > s2)) return false;
  if (s2 <= bar_s2_value) return true;
  // Above the line S1 - S2 = beta (S_target - S2) the supremum of gamma/(S1 - S2)
  // along the constant arc is interior, and only the S2 <= bar_s2 test applies.
  const double beta = switching_beta(scn.alpha1(), scn.alpha2());
  if (s1 - s2 > beta * (st - s2)) return false;
  const double f0 = switching_f0(scn.alpha1(), scn.alpha2(), st, s1, s2);
  return law.mu(s2) * f0 <= law.mu_prime(s2);
}

bool switching_set_contains(double s1_0, double s2_0, const TwoCompScenario& scn,
                            const GrowthLaw& law) {
  if (!(s2_0 > 0.0 && s2_0 < scn.s_target)) {
    throw DomainError("switching set: requires 0 < S2_0 < S_target");
  }
  if (!(s1_0 > scn.s_target)) throw DomainError("switching set: requires S1_0 > S_target");
  return in_switching_set(s1_0, s2_0, scn, law, bar_s2(scn, law));
}

// -- identification --------------------------------------------------------------------------

Alpha2Estimate estimate_alpha2(double s2_slope_0, double s2_0, double sr_applied,
                               const GrowthLaw& law, double alpha_reference) {
  const double denom = law.mu(sr_applied) * (sr_applied - s2_0);
  if (denom == 0.0) throw DomainError("estimate_alpha2: zero denominator (S_r == S2_0)");
  if (!(sr_applied < s2_0)) throw DomainError("estimate_alpha2: requires S_r < S2_0");
  if (!(s2_slope_0 < 0.0)) throw DomainError("estimate_alpha2: requires a negative slope");
  const double a2 = s2_slope_0 / denom;
  const bool close =
      alpha_reference > 0.0 && std::abs(a2 - alpha_reference) / alpha_reference < 0.1;
  return {a2, close};
}

// -- simulation ------------------------------------------------------------------------------

ControlledSystem twocomp_system(const TwoCompScenario& scn, const GrowthLaw& law) {
  return twocomp_system(scn.alpha1(), scn.alpha2(), scn.vr, law);
}

TargetFunction twocomp_target(const TwoCompScenario& scn) {
  const double st = scn.s_target;
  return [st](const State& x) { return x[0] - st; };
}

double default_horizon(const TwoCompScenario& scn, const GrowthLaw& law) {
  const double sr = 0.5 * scn.s_target;
  const double rate = std::min(scn.alpha1(), scn.alpha2()) * law.mu(sr);
  return 50.0 * (1.0 + std::log((scn.s1_0 - sr) / (scn.s_target - sr))) / rate;
}

Trajectory simulate_constant_twocomp(const TwoCompScenario& scn, const GrowthLaw& law,
                                     double sr, const IntegrateOptions& opts) {
  scn.validate();
  return integrate(twocomp_system(scn, law), ConstantControl{sr}, State{scn.s1_0, scn.s2_0},
                   twocomp_target(scn), default_horizon(scn, law), opts);
}

ConstantOptimum best_constant_twocomp_simulated(const TwoCompScenario& scn,
                                                const GrowthLaw& law,
                                                const IntegrateOptions& opts) {
  scn.validate();
  const double hi = std::min(scn.s2_0, scn.s_target);
  auto time = [&](double sr) {
    if (!(sr > 0.0 && sr < hi)) return std::numeric_limits<double>::infinity();
    const auto tr = simulate_constant_twocomp(scn, law, sr, opts);
    return tr.hit_time ? *tr.hit_time : std::numeric_limits<double>::infinity();
  };
  const auto m = minimize_guarded(time, 0.0, hi, 1e-8 * hi, 100, 200);
  return {m.x, sr_to_q(law, m.x, scn.vr), m.fx, m.unimodal()};
}

Trajectory simulate_single_measurement_feedback(const TwoCompScenario& scn,
                                                const GrowthLaw& law, int measured,
                                                const IntegrateOptions& opts) {
  scn.validate();
  if (measured != 1 && measured != 2) throw std::invalid_argument("measured must be 1 or 2");
  const std::size_t idx = static_cast<std::size_t>(measured - 1);
  StateFeedback fb{[law, idx](const State& x) { return feedback_optimal(law, x[idx]); }};
  return integrate(twocomp_system(scn, law), fb, State{scn.s1_0, scn.s2_0},
                   twocomp_target(scn), default_horizon(scn, law), opts);
}

}  // namespace bioremed
