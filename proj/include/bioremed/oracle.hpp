#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "bioremed/growth.hpp"
#include "bioremed/homogeneous.hpp"
#include "bioremed/sim.hpp"
#include "bioremed/twocomp.hpp"

namespace bioremed {

enum class OracleModel { kHomogeneous, kTwoComp };

struct HjbOptions {
  // Controls are fractions theta_j = j / (controls + 1) of the admissible
  // upper bound (S_l, resp. S2).
  std::size_t controls = 200;
  std::size_t max_sweeps = 100000;
  // Convergence: max update below tol times the smallest local time step.
  double tol = 1e-6;
  // Characteristic foot displacement, in cells.
  double cfl = 1.0;
};

/// Minimal-time value function and greedy policy on a rectilinear grid.
/// One-dimensional (S_l) for the homogeneous model, two-dimensional (S1, S2)
/// for the two-compartment model.
class ValueGrid {
 public:
  OracleModel model() const { return model_; }
  const std::vector<double>& axis1() const { return axis1_; }
  const std::vector<double>& axis2() const { return axis2_; }
  std::size_t sweeps() const { return sweeps_; }
  double min_time_step() const { return min_step_; }

  double value(std::size_t i, std::size_t j = 0) const { return value_[index(i, j)]; }
  double policy(std::size_t i, std::size_t j = 0) const { return policy_[index(i, j)]; }

  /// Linear / bilinear interpolation of the value at x.
  double value_at(const State& x) const;
  /// Interpolated greedy control S_r at x. Throws OracleError outside the grid.
  double policy_at(const State& x) const;
  bool contains(const State& x) const;

  /// Columns: node coordinates, value, policy.
  void write_csv(std::ostream& os) const;

  ControlledSystem system() const;
  TargetFunction target() const;

 private:
  friend ValueGrid hjb_solve_homogeneous(const HomogeneousScenario&, const GrowthLaw&,
                                         std::size_t, double, const HjbOptions&);
  friend ValueGrid hjb_solve_twocomp(const TwoCompScenario&, const GrowthLaw&, std::size_t,
                                     std::size_t, double, double, const HjbOptions&);

  explicit ValueGrid(GrowthLaw law) : law_(std::move(law)) {}
  std::size_t index(std::size_t i, std::size_t j) const {
    return axis2_.empty() ? i : i * axis2_.size() + j;
  }
  double interpolate(const std::vector<double>& field, const State& x) const;

  OracleModel model_ = OracleModel::kHomogeneous;
  GrowthLaw law_;
  double alpha1_ = 0.0;  // alpha for the homogeneous model
  double alpha2_ = 0.0;
  double vr_ = 0.0;
  double s_target_ = 0.0;
  std::vector<double> axis1_;
  std::vector<double> axis2_;
  std::vector<double> value_;
  std::vector<double> policy_;
  std::vector<double> fraction_;
  std::size_t sweeps_ = 0;
  double min_step_ = 0.0;
};

/// Semi-Lagrangian value iteration for the homogeneous model on
/// [S_target, s_max] with `nodes` uniform nodes.
ValueGrid hjb_solve_homogeneous(const HomogeneousScenario& scn, const GrowthLaw& law,
                                std::size_t nodes, double s_max, const HjbOptions& opts = {});

/// Semi-Lagrangian value iteration for the two-compartment model on
/// [S_target, s1_max] x [s2_min, s1_max], restricted to S1 >= S2. Nodes above
/// the diagonal carry the value of the diagonal point with the same S1.
ValueGrid hjb_solve_twocomp(const TwoCompScenario& scn, const GrowthLaw& law, std::size_t n1,
                            std::size_t n2, double s1_max, double s2_min,
                            const HjbOptions& opts = {});

/// Follows the grid's interpolated greedy policy from x0 until the target.
Trajectory greedy_rollout(const ValueGrid& grid, const State& x0,
                          const IntegrateOptions& opts = {});

}  // namespace bioremed
