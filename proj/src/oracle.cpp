#include "bioremed/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "bioremed/errors.hpp"

namespace bioremed {

namespace {

// Initial value of unresolved nodes; finite so interpolation weights of 0
// never produce NaN.
constexpr double kUnresolved = 1e30;

std::vector<double> uniform_axis(double lo, double hi, std::size_t n) {
  std::vector<double> axis(n);
  for (std::size_t i = 0; i < n; ++i) {
    axis[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  axis.back() = hi;
  return axis;
}

// Cell index k and weight w with x = (1 - w) axis[k] + w axis[k + 1]; x clamped.
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double x) {
  const double lo = axis.front();
  const double hi = axis.back();
  const double step = (hi - lo) / static_cast<double>(axis.size() - 1);
  x = std::clamp(x, lo, hi);
  auto k = static_cast<std::size_t>((x - lo) / step);
  k = std::min(k, axis.size() - 2);
  const double w = (x - axis[k]) / (axis[k + 1] - axis[k]);
  return {k, std::clamp(w, 0.0, 1.0)};
}

std::vector<double> control_fractions(std::size_t m) {
  std::vector<double> th(m);
  for (std::size_t j = 0; j < m; ++j) {
    th[j] = static_cast<double>(j + 1) / static_cast<double>(m + 1);
  }
  return th;
}

}  // namespace

double ValueGrid::interpolate(const std::vector<double>& field, const State& x) const {
  const auto [i, wi] = locate(axis1_, x.at(0));
  if (axis2_.empty()) return (1.0 - wi) * field[i] + wi * field[i + 1];
  const auto [j, wj] = locate(axis2_, x.at(1));
  const std::size_t n2 = axis2_.size();
  const double v00 = field[i * n2 + j], v01 = field[i * n2 + j + 1];
  const double v10 = field[(i + 1) * n2 + j], v11 = field[(i + 1) * n2 + j + 1];
  return (1.0 - wi) * ((1.0 - wj) * v00 + wj * v01) + wi * ((1.0 - wj) * v10 + wj * v11);
}

bool ValueGrid::contains(const State& x) const {
  const double rel = 1e-12;
  if (x.at(0) > axis1_.back() * (1.0 + rel)) return false;
  if (!axis2_.empty() && x.at(1) < axis2_.front() * (1.0 - rel)) return false;
  return true;
}

double ValueGrid::value_at(const State& x) const {
  if (x.at(0) <= s_target_) return 0.0;
  return interpolate(value_, x);
}

double ValueGrid::policy_at(const State& x) const {
  if (!contains(x)) {
    std::ostringstream os;
    os << "state (" << x[0];
    if (x.size() > 1) os << ", " << x[1];
    os << ") left the oracle grid";
    throw OracleError(os.str());
  }
  const double upper = axis2_.empty() ? x[0] : std::min(x[1], x[0]);
  return interpolate(fraction_, x) * upper;
}

void ValueGrid::write_csv(std::ostream& os) const {
  if (axis2_.empty()) {
    os << "Sl,value,policy\n";
    for (std::size_t i = 0; i < axis1_.size(); ++i) {
      os << format_number(axis1_[i]) << ',' << format_number(value_[i]) << ','
         << format_number(policy_[i]) << '\n';
    }
    return;
  }
  os << "S1,S2,value,policy\n";
  for (std::size_t i = 0; i < axis1_.size(); ++i) {
    for (std::size_t j = 0; j < axis2_.size(); ++j) {
      os << format_number(axis1_[i]) << ',' << format_number(axis2_[j]) << ','
         << format_number(value(i, j)) << ',' << format_number(policy(i, j)) << '\n';
    }
  }
}

ControlledSystem ValueGrid::system() const {
  if (model_ == OracleModel::kHomogeneous) return homogeneous_system(alpha1_, vr_, law_);
  return twocomp_system(alpha1_, alpha2_, vr_, law_);
}

TargetFunction ValueGrid::target() const {
  const double st = s_target_;
  return [st](const State& x) { return x[0] - st; };
}

ValueGrid hjb_solve_homogeneous(const HomogeneousScenario& scn, const GrowthLaw& law,
                                std::size_t nodes, double s_max, const HjbOptions& opts) {
  scn.validate();
  if (nodes < 3) throw std::invalid_argument("hjb: at least 3 nodes required");
  if (!(s_max > scn.s_target)) throw std::invalid_argument("hjb: s_max must exceed S_target");
  ValueGrid g(law);
  g.model_ = OracleModel::kHomogeneous;
  g.alpha1_ = scn.alpha();
  g.vr_ = scn.vr;
  g.s_target_ = scn.s_target;
  g.axis1_ = uniform_axis(scn.s_target, s_max, nodes);
  g.value_.assign(nodes, kUnresolved);
  g.policy_.assign(nodes, 0.0);
  g.fraction_.assign(nodes, 0.0);
  g.value_[0] = 0.0;

  const auto thetas = control_fractions(opts.controls);
  const double alpha = scn.alpha();
  const double dx = g.axis1_[1] - g.axis1_[0];
  double min_step = std::numeric_limits<double>::infinity();
  for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double max_update = 0.0;
    for (std::size_t i = 1; i < nodes; ++i) {
      const double s = g.axis1_[i];
      double best = std::numeric_limits<double>::infinity();
      double best_theta = 0.0;
      for (double th : thetas) {
        const double u = th * s;
        const double f = alpha * law.mu(u) * (u - s);
        if (!(f < 0.0)) continue;
        double h = opts.cfl * dx / -f;
        // Midpoint foot of the characteristic (u held constant).
        const double mid = s + 0.5 * h * f;
        const double fm = alpha * law.mu(u) * (u - mid);
        const double foot = s + h * fm;
        double cand;
        if (foot <= scn.s_target) {
          h *= (s - scn.s_target) / (s - foot);
          cand = h;
        } else {
          cand = h + g.interpolate(g.value_, State{foot});
        }
        min_step = std::min(min_step, h);
        if (cand < best) {
          best = cand;
          best_theta = th;
        }
      }
      max_update = std::max(max_update, std::abs(best - g.value_[i]));
      g.value_[i] = best;
      g.fraction_[i] = best_theta;
      g.policy_[i] = best_theta * s;
    }
    g.sweeps_ = sweep;
    if (max_update < opts.tol * min_step) {
      g.min_step_ = min_step;
      // Target node: policy extended from its neighbour so rollouts near the
      // boundary are not dragged toward S_r = 0.
      g.fraction_[0] = g.fraction_[1];
      g.policy_[0] = g.fraction_[0] * g.axis1_[0];
      return g;
    }
  }
  throw OracleError("hjb_solve_homogeneous: no convergence within the sweep cap");
}

ValueGrid hjb_solve_twocomp(const TwoCompScenario& scn, const GrowthLaw& law, std::size_t n1,
                            std::size_t n2, double s1_max, double s2_min,
                            const HjbOptions& opts) {
  scn.validate();
  if (n1 < 3 || n2 < 3) throw std::invalid_argument("hjb: at least 3 nodes per axis");
  if (!(s1_max > scn.s_target)) throw std::invalid_argument("hjb: s1_max must exceed S_target");
  if (!(s2_min > 0.0 && s2_min < scn.s_target)) {
    throw std::invalid_argument("hjb: s2_min must lie in (0, S_target)");
  }
  ValueGrid g(law);
  g.model_ = OracleModel::kTwoComp;
  g.alpha1_ = scn.alpha1();
  g.alpha2_ = scn.alpha2();
  g.vr_ = scn.vr;
  g.s_target_ = scn.s_target;
  g.axis1_ = uniform_axis(scn.s_target, s1_max, n1);
  g.axis2_ = uniform_axis(s2_min, s1_max, n2);
  g.value_.assign(n1 * n2, kUnresolved);
  g.policy_.assign(n1 * n2, 0.0);
  g.fraction_.assign(n1 * n2, 0.0);
  for (std::size_t j = 0; j < n2; ++j) g.value_[j] = 0.0;

  const auto thetas = control_fractions(opts.controls);
  const double a1 = scn.alpha1(), a2 = scn.alpha2();
  const double st = scn.s_target;
  const double d1 = g.axis1_[1] - g.axis1_[0];
  const double d2 = g.axis2_[1] - g.axis2_[0];
  double min_step = std::numeric_limits<double>::infinity();

  struct Update {
    double value;
    double theta;
  };
  // Semi-Lagrangian update at an arbitrary point of the admissible domain.
  auto update = [&](double s1, double s2) {
    Update best{std::numeric_limits<double>::infinity(), 0.0};
    for (double th : thetas) {
      const double u = th * s2;
      const double m = law.mu(u);
      const double f1 = a1 * m * (s2 - s1);
      const double f2 = a2 * m * (u - s2);
      const double rate = std::max(std::abs(f1) / d1, std::abs(f2) / d2);
      if (!(rate > 0.0)) continue;
      double h = opts.cfl / rate;
      // Midpoint foot of the characteristic (u held constant).
      const double m1 = s1 + 0.5 * h * f1;
      const double m2 = s2 + 0.5 * h * f2;
      const double y1 = s1 + h * a1 * m * (m2 - m1);
      double cand;
      if (y1 <= st) {
        h *= (s1 - st) / (s1 - y1);
        cand = h;
      } else {
        const double y2 = std::max(s2 + h * a2 * m * (u - m2), s2_min);
        cand = h + g.interpolate(g.value_, State{y1, y2});
      }
      min_step = std::min(min_step, h);
      if (cand < best.value) best = {cand, th};
    }
    return best;
  };

  for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double max_update = 0.0;
    for (std::size_t i = 1; i < n1; ++i) {
      const double s1 = g.axis1_[i];
      std::size_t j = 0;
      for (; j < n2 && g.axis2_[j] <= s1; ++j) {
        const Update up = update(s1, g.axis2_[j]);
        const std::size_t k = i * n2 + j;
        max_update = std::max(max_update, std::abs(up.value - g.value_[k]));
        g.value_[k] = up.value;
        g.fraction_[k] = up.theta;
        g.policy_[k] = up.theta * g.axis2_[j];
      }
      if (j == n2) continue;
      const Update diag = update(s1, s1);
      for (; j < n2; ++j) {
        const std::size_t k = i * n2 + j;
        max_update = std::max(max_update, std::abs(diag.value - g.value_[k]));
        g.value_[k] = diag.value;
        g.fraction_[k] = diag.theta;
        g.policy_[k] = diag.theta * s1;
      }
    }
    g.sweeps_ = sweep;
    if (max_update < opts.tol * min_step) {
      g.min_step_ = min_step;
      for (std::size_t j = 0; j < n2; ++j) {
        g.fraction_[j] = g.fraction_[n2 + j];
        g.policy_[j] = g.fraction_[j] * std::min(g.axis2_[j], st);
      }
      return g;
    }
  }
  throw OracleError("hjb_solve_twocomp: no convergence within the sweep cap");
}

Trajectory greedy_rollout(const ValueGrid& grid, const State& x0, const IntegrateOptions& opts) {
  if (!grid.contains(x0)) throw OracleError("greedy_rollout: initial state outside the grid");
  const double v0 = grid.value_at(x0);
  if (!(v0 < kUnresolved)) throw OracleError("greedy_rollout: initial state not controllable");
  StateFeedback fb{[&grid](const State& x) { return grid.policy_at(x); }};
  const double horizon = std::max(10.0 * v0, 1.0);
  return integrate(grid.system(), fb, x0, grid.target(), horizon, opts);
}

}  // namespace bioremed
