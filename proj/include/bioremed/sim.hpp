#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bioremed/growth.hpp"

namespace bioremed {

using State = std::vector<double>;

class SynthesisField;

struct Sample {
  double t;   // s
  State x;    // concentrations, mol/m^3
  double sr;  // reactor output concentration, mol/m^3
  double q;   // flow rate, m^3/s
};

struct Trajectory {
  std::vector<Sample> samples;
  std::optional<double> hit_time;
  State terminal_state;

  bool reached_target() const { return hit_time.has_value(); }
};

// Control policies return the reactor concentration S_r.
struct ConstantControl {
  double sr;
};
struct StateFeedback {
  std::function<double(const State&)> law;
};
struct SynthesizedControl {
  std::shared_ptr<const SynthesisField> field;
};
using ControlPolicy = std::variant<ConstantControl, StateFeedback, SynthesizedControl>;

/// Raw policy output at state x (before clamping to the admissible range).
double evaluate_policy(const ControlPolicy& policy, const State& x);

/// Autonomous controlled dynamics dx/dt = field(x, u).
struct ControlledSystem {
  std::vector<std::string> state_names;
  std::function<State(const State& x, double u)> field;
  // Admissible control range at x; feedback outputs are clamped into it.
  std::function<std::pair<double, double>(const State& x)> control_bounds;
  // Flow rate recorded for control u.
  std::function<double(double u)> flow;
  // Reactor concentration recorded for (x, u); defaults to u.
  std::function<double(const State& x, double u)> recorded_sr;
};

/// Target is the set {x : target(x) <= 0}.
using TargetFunction = std::function<double(const State&)>;

enum class Stepper { kAdaptiveRK45, kFixedRK4 };

struct IntegrateOptions {
  Stepper stepper = Stepper::kAdaptiveRK45;
  double rtol = 1e-9;
  double atol = 1e-13;
  double initial_step = 0.0;  // 0: automatic
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-12;    // relative to max(1, |t|)
  double fixed_step = 0.0;    // RK4 step; 0: t_max / 1e4
  // > 0: sampled-data control, held constant on [k hold_dt, (k+1) hold_dt).
  double hold_dt = 0.0;
  double event_rel_tol = 1e-13;
  std::size_t max_steps = 5'000'000;
  // Lower clamp for feedback outputs; keeps mu(S_r) away from 0.
  double control_floor = 1e-12;
};

/// Integrates the system under the policy until target(x) <= 0 or t_max.
/// Target crossings are localized by bisection on the step fraction, each
/// candidate obtained by re-taking the step from its start.
Trajectory integrate(const ControlledSystem& system, const ControlPolicy& policy, State x0,
                     const TargetFunction& target, double t_max,
                     const IntegrateOptions& opts = {});

// -- model vector fields -----------------------------------------------------

/// dS_l/dt = alpha mu(S_r) (S_r - S_l).
double homogeneous_field(double alpha, const GrowthLaw& law, double sl, double sr);

/// (dS1/dt, dS2/dt) for the two-compartment resource.
std::array<double, 2> twocomp_field(double alpha1, double alpha2, const GrowthLaw& law,
                                    double s1, double s2, double sr);

/// (dS_r/dt, dX_r/dt) of the chemostat with unit yield, fed at concentration S_l.
std::array<double, 2> full_chemostat_field(const GrowthLaw& law, double sr_state, double xr,
                                           double sl, double q, double vr);

/// State (S_l); control S_r in (0, S_l].
ControlledSystem homogeneous_system(double alpha, double vr, GrowthLaw law);
/// State (S1, S2); control S_r in (0, S2].
ControlledSystem twocomp_system(double alpha1, double alpha2, double vr, GrowthLaw law);
/// State (S_r, X_r, S_l) of reactor coupled to a resource of volume v; control Q.
ControlledSystem full_chemostat_system(double v, double vr, GrowthLaw law);

// -- CSV -----------------------------------------------------------------------

/// Header: t,<state names>,Sr,Q; numbers with 12 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& state_names);
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<std::string>& state_names);

struct TrajectoryTable {
  std::vector<std::string> state_names;
  std::vector<Sample> samples;
};
TrajectoryTable read_trajectory_csv(std::istream& is);

/// printf("%.12g") formatting shared by every CSV writer.
std::string format_number(double v);

}  // namespace bioremed
