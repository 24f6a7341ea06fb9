#include "bioremed/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "bioremed/errors.hpp"
#include "bioremed/synthesis.hpp"

namespace bioremed {

double evaluate_policy(const ControlPolicy& policy, const State& x) {
  if (const auto* c = std::get_if<ConstantControl>(&policy)) return c->sr;
  if (const auto* f = std::get_if<StateFeedback>(&policy)) return f->law(x);
  const auto& s = std::get<SynthesizedControl>(policy);
  if (!s.field) throw std::invalid_argument("synthesized policy without a field");
  return s.field->query(x.at(0), x.at(1));
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

class Stepper45 {
 public:
  Stepper45(const ControlledSystem& sys, const ControlPolicy& policy,
            const IntegrateOptions& opts)
      : sys_(sys), policy_(policy), opts_(opts) {}

  void hold(std::optional<double> u) { held_ = u; }

  double control(const State& x) const {
    if (held_) return *held_;
    return clamp_control(x);
  }

  double clamp_control(const State& x) const {
    const double raw = evaluate_policy(policy_, x);
    auto [lo, hi] = sys_.control_bounds(x);
    lo = std::max(lo, opts_.control_floor);
    if (hi < lo) return hi > 0.0 ? hi : lo;
    return std::clamp(raw, lo, hi);
  }

  State f(const State& x) const { return sys_.field(x, control(x)); }

  // One DP45 step; returns 5th-order solution, fills err with the embedded
  // error estimate when non-null.
  State dp45(const State& x, double h, State* err) const {
    const std::size_t n = x.size();
    State tmp(n);
    auto stage = [&](std::initializer_list<std::pair<double, const State*>> terms) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = x[i];
        for (const auto& [c, k] : terms) acc += h * c * (*k)[i];
        tmp[i] = std::max(acc, floor_value(x[i]));
      }
      return f(tmp);
    };
    const State k1 = f(x);
    const State k2 = stage({{a21, &k1}});
    const State k3 = stage({{a31, &k1}, {a32, &k2}});
    const State k4 = stage({{a41, &k1}, {a42, &k2}, {a43, &k3}});
    const State k5 = stage({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    const State k6 = stage({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    State y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = x[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    }
    if (err) {
      const State k7 = f(y);
      err->assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        (*err)[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                         e7 * k7[i]);
      }
    }
    return y;
  }

  State rk4(const State& x, double h) const {
    const std::size_t n = x.size();
    auto shifted = [&](const State& k, double c) {
      State s(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = std::max(x[i] + c * h * k[i], floor_value(x[i]));
      return s;
    };
    const State k1 = f(x);
    const State k2 = f(shifted(k1, 0.5));
    const State k3 = f(shifted(k2, 0.5));
    const State k4 = f(shifted(k3, 1.0));
    State y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return y;
  }

  State step(const State& x, double h) const {
    return opts_.stepper == Stepper::kFixedRK4 ? rk4(x, h) : dp45(x, h, nullptr);
  }

 private:
  // Intermediate stages may dip slightly below zero; concentrations are
  // floored there only when the base state is non-negative.
  static double floor_value(double base) {
    return base >= 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }

  const ControlledSystem& sys_;
  const ControlPolicy& policy_;
  const IntegrateOptions& opts_;
  std::optional<double> held_;
};

bool finite_state(const State& x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void floor_state(State& x) {
  for (double& v : x) v = std::max(v, 0.0);
}

double error_norm(const State& err, const State& x, const State& y, double atol, double rtol) {
  double acc = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(x[i]), std::abs(y[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace

Trajectory integrate(const ControlledSystem& system, const ControlPolicy& policy, State x0,
                     const TargetFunction& target, double t_max, const IntegrateOptions& opts) {
  if (!(t_max > 0.0)) throw DomainError("integrate: t_max must be positive");
  if (x0.empty()) throw DomainError("integrate: empty initial state");
  if (!finite_state(x0)) throw DomainError("integrate: non-finite initial state");

  Stepper45 st(system, policy, opts);
  Trajectory traj;
  auto record = [&](double t, const State& x) {
    const double u = st.control(x);
    const double sr = system.recorded_sr ? system.recorded_sr(x, u) : u;
    traj.samples.push_back({t, x, sr, system.flow(u)});
  };

  double t = 0.0;
  State x = std::move(x0);
  std::optional<double> hold_end;
  auto refresh_hold = [&]() {
    if (opts.hold_dt <= 0.0) return;
    if (!hold_end || t >= *hold_end * (1.0 - 1e-15)) {
      st.hold(st.clamp_control(x));
      const double k = std::floor(t / opts.hold_dt + 1e-9);
      hold_end = (k + 1.0) * opts.hold_dt;
    }
  };
  refresh_hold();
  record(t, x);
  if (target(x) <= 0.0) {
    traj.hit_time = 0.0;
    traj.terminal_state = x;
    return traj;
  }

  const bool adaptive = opts.stepper == Stepper::kAdaptiveRK45;
  double h;
  if (!adaptive) {
    h = opts.fixed_step > 0.0 ? opts.fixed_step : t_max / 1e4;
  } else if (opts.initial_step > 0.0) {
    h = opts.initial_step;
  } else {
    const State dx = st.f(x);
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double sc = opts.atol + opts.rtol * std::abs(x[i]);
      d0 = std::max(d0, std::abs(x[i]) / sc);
      d1 = std::max(d1, std::abs(dx[i]) / sc);
    }
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  }
  h = std::min({h, opts.max_step, t_max});

  State err;
  for (std::size_t n = 0; n < opts.max_steps; ++n) {
    if (t >= t_max) break;
    refresh_hold();
    if (adaptive && h < opts.min_step * std::max(1.0, std::abs(t))) {
      throw IntegrationError("integrate: step size underflow", t, x);
    }
    double h_try = std::min(h, t_max - t);
    if (hold_end) h_try = std::min(h_try, *hold_end - t);
    if (!(h_try > 0.0)) {
      t = hold_end ? std::min(*hold_end, t_max) : t_max;
      continue;
    }

    State y;
    if (adaptive) {
      y = st.dp45(x, h_try, &err);
      if (!finite_state(y)) {
        h = 0.25 * h_try;
        if (h < opts.min_step * std::max(1.0, std::abs(t))) {
          throw IntegrationError("integrate: non-finite state", t, x);
        }
        continue;
      }
      const double en = error_norm(err, x, y, opts.atol, opts.rtol);
      const double factor =
          en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (en > 1.0) {
        h = h_try * factor;
        continue;
      }
      if (h_try >= h) h = std::min(h_try * factor, opts.max_step);
    } else {
      y = st.rk4(x, h_try);
      if (!finite_state(y)) throw IntegrationError("integrate: non-finite state", t, x);
    }
    floor_state(y);

    if (target(y) <= 0.0) {
      double lo = 0.0, hi = 1.0;
      State inside = y;
      for (int it = 0; it < 200; ++it) {
        if ((hi - lo) * h_try <= opts.event_rel_tol * std::max(1.0, t + h_try)) break;
        const double mid = 0.5 * (lo + hi);
        State ym = st.step(x, mid * h_try);
        floor_state(ym);
        if (target(ym) <= 0.0) {
          hi = mid;
          inside = std::move(ym);
        } else {
          lo = mid;
        }
      }
      t += hi * h_try;
      record(t, inside);
      traj.hit_time = t;
      traj.terminal_state = inside;
      return traj;
    }

    t += h_try;
    x = std::move(y);
    record(t, x);
  }
  if (t < t_max) throw IntegrationError("integrate: step budget exhausted", t, x);
  traj.terminal_state = x;
  return traj;
}

// -- fields --------------------------------------------------------------------

double homogeneous_field(double alpha, const GrowthLaw& law, double sl, double sr) {
  return alpha * law.mu(sr) * (sr - sl);
}

std::array<double, 2> twocomp_field(double alpha1, double alpha2, const GrowthLaw& law,
                                    double s1, double s2, double sr) {
  const double m = law.mu(sr);
  return {alpha1 * m * (s2 - s1), alpha2 * m * (sr - s2)};
}

std::array<double, 2> full_chemostat_field(const GrowthLaw& law, double sr_state, double xr,
                                           double sl, double q, double vr) {
  const double m = law.mu(sr_state);
  const double d = q / vr;
  return {-m * xr + d * (sl - sr_state), m * xr - d * xr};
}

ControlledSystem homogeneous_system(double alpha, double vr, GrowthLaw law) {
  ControlledSystem sys;
  sys.state_names = {"Sl"};
  sys.field = [alpha, law](const State& x, double u) {
    return State{homogeneous_field(alpha, law, x[0], u)};
  };
  sys.control_bounds = [](const State& x) { return std::pair{0.0, x[0]}; };
  sys.flow = [vr, law](double u) { return sr_to_q(law, u, vr); };
  return sys;
}

ControlledSystem twocomp_system(double alpha1, double alpha2, double vr, GrowthLaw law) {
  ControlledSystem sys;
  sys.state_names = {"S1", "S2"};
  sys.field = [alpha1, alpha2, law](const State& x, double u) {
    const auto d = twocomp_field(alpha1, alpha2, law, x[0], x[1], u);
    return State{d[0], d[1]};
  };
  sys.control_bounds = [](const State& x) { return std::pair{0.0, x[1]}; };
  sys.flow = [vr, law](double u) { return sr_to_q(law, u, vr); };
  return sys;
}

ControlledSystem full_chemostat_system(double v, double vr, GrowthLaw law) {
  ControlledSystem sys;
  sys.state_names = {"Sr", "Xr", "Sl"};
  sys.field = [v, vr, law](const State& x, double q) {
    const auto r = full_chemostat_field(law, x[0], x[1], x[2], q, vr);
    return State{r[0], r[1], q / v * (x[0] - x[2])};
  };
  const double q_max = vr * law.sup();
  sys.control_bounds = [q_max](const State&) { return std::pair{0.0, q_max}; };
  sys.flow = [](double q) { return q; };
  sys.recorded_sr = [](const State& x, double) { return x[0]; };
  return sys;
}

// -- CSV -----------------------------------------------------------------------

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& state_names) {
  os << "t";
  for (const auto& n : state_names) os << ',' << n;
  os << ",Sr,Q\n";
  for (const auto& s : traj.samples) {
    os << format_number(s.t);
    for (double v : s.x) os << ',' << format_number(v);
    os << ',' << format_number(s.sr) << ',' << format_number(s.q) << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<std::string>& state_names) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_trajectory_csv(os, traj, state_names);
}

TrajectoryTable read_trajectory_csv(std::istream& is) {
  TrajectoryTable table;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trajectory CSV: missing header");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.size() < 4 || cols.front() != "t" || cols[cols.size() - 2] != "Sr" ||
      cols.back() != "Q") {
    throw std::runtime_error("trajectory CSV: unexpected header '" + line + "'");
  }
  table.state_names.assign(cols.begin() + 1, cols.end() - 2);
  const std::size_t n = table.state_names.size();
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) vals.push_back(std::stod(c));
    if (vals.size() != n + 3) {
      throw std::runtime_error("trajectory CSV: wrong column count on line " +
                               std::to_string(lineno));
    }
    table.samples.push_back({vals[0], State(vals.begin() + 1, vals.begin() + 1 + n),
                             vals[n + 1], vals[n + 2]});
  }
  return table;
}

}  // namespace bioremed
