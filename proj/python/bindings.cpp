#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "bioremed/errors.hpp"
#include "bioremed/growth.hpp"
#include "bioremed/homogeneous.hpp"
#include "bioremed/oracle.hpp"
#include "bioremed/sim.hpp"
#include "bioremed/synthesis.hpp"
#include "bioremed/twocomp.hpp"

namespace py = pybind11;
using namespace bioremed;

namespace {

// Trajectory as a plain dict of lists; avoids a NumPy build dependency.
py::dict trajectory_dict(const Trajectory& traj) {
  py::list t, x, sr, q;
  for (const auto& s : traj.samples) {
    t.append(s.t);
    x.append(py::cast(s.x));
    sr.append(s.sr);
    q.append(s.q);
  }
  py::dict d;
  d["t"] = t;
  d["x"] = x;
  d["sr"] = sr;
  d["q"] = q;
  d["hit_time"] = traj.hit_time ? py::cast(*traj.hit_time) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Minimal-time strategies for side-loop bioremediation (C++ core).";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<WashoutError>(m, "WashoutError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);
  py::register_exception<SynthesisError>(m, "SynthesisError", PyExc_RuntimeError);
  py::register_exception<OracleError>(m, "OracleError", PyExc_RuntimeError);

  py::class_<GrowthLaw>(m, "GrowthLaw")
      .def_static("monod", &GrowthLaw::monod, py::arg("mu_max"), py::arg("K"))
      .def_static("linear", &GrowthLaw::linear, py::arg("mu"))
      .def("mu", &GrowthLaw::mu, py::arg("s"))
      .def("mu_prime", &GrowthLaw::mu_prime, py::arg("s"))
      .def("mu_second", &GrowthLaw::mu_second, py::arg("s"))
      .def("mu_inverse", &GrowthLaw::mu_inverse, py::arg("r"))
      .def("__repr__", &GrowthLaw::describe);

  m.def("sr_to_q", &sr_to_q, py::arg("law"), py::arg("sr"), py::arg("vr"));
  m.def("q_to_sr", &q_to_sr, py::arg("law"), py::arg("q"), py::arg("vr"));

  py::class_<HomogeneousScenario>(m, "HomogeneousScenario")
      .def(py::init([](double v, double vr, double s0, double st) {
             HomogeneousScenario s{v, vr, s0, st};
             s.validate();
             return s;
           }),
           py::arg("V"), py::arg("V_r"), py::arg("S0"), py::arg("S_target"))
      .def_readonly("V", &HomogeneousScenario::v)
      .def_readonly("V_r", &HomogeneousScenario::vr)
      .def_readonly("S0", &HomogeneousScenario::s0)
      .def_readonly("S_target", &HomogeneousScenario::s_target)
      .def_property_readonly("alpha", &HomogeneousScenario::alpha);

  py::class_<ConstantOptimum>(m, "ConstantOptimum")
      .def_readonly("sr", &ConstantOptimum::sr)
      .def_readonly("q", &ConstantOptimum::q)
      .def_readonly("tf", &ConstantOptimum::tf)
      .def_readonly("unimodal", &ConstantOptimum::unimodal);

  m.def("tf_constant", &tf_constant, py::arg("scenario"), py::arg("law"), py::arg("sr"));
  m.def("best_constant", &best_constant, py::arg("scenario"), py::arg("law"));
  m.def("feedback_optimal", &feedback_optimal, py::arg("law"), py::arg("sl"));
  m.def(
      "solve_feedback",
      [](const HomogeneousScenario& s, const GrowthLaw& law) {
        return trajectory_dict(solve_feedback(s, law));
      },
      py::arg("scenario"), py::arg("law"));
  m.def(
      "simulate_constant",
      [](const HomogeneousScenario& s, const GrowthLaw& law, double sr) {
        return trajectory_dict(simulate_constant(s, law, sr));
      },
      py::arg("scenario"), py::arg("law"), py::arg("sr"));

  py::class_<TwoCompScenario>(m, "TwoCompScenario")
      .def(py::init([](double v1, double v2, double vr, double s1, double s2, double st) {
             TwoCompScenario s{v1, v2, vr, s1, s2, st};
             s.validate();
             return s;
           }),
           py::arg("V1"), py::arg("V2"), py::arg("V_r"), py::arg("S1_0"), py::arg("S2_0"),
           py::arg("S_target"))
      .def_static("from_fraction", &TwoCompScenario::from_fraction, py::arg("V"), py::arg("p"),
                  py::arg("V_r"), py::arg("S1_0"), py::arg("S2_0"), py::arg("S_target"))
      .def_property_readonly("p", &TwoCompScenario::p)
      .def_property_readonly("alpha1", &TwoCompScenario::alpha1)
      .def_property_readonly("alpha2", &TwoCompScenario::alpha2);

  py::class_<TangencyOptimum>(m, "TangencyOptimum")
      .def_readonly("sr", &TangencyOptimum::sr)
      .def_readonly("q", &TangencyOptimum::q)
      .def_readonly("tf", &TangencyOptimum::tf)
      .def_readonly("tangency_residual", &TangencyOptimum::tangency_residual);

  m.def("kernel_A", &kernel_A, py::arg("p"), py::arg("tau"), py::arg("alpha"));
  m.def("ratio_B", &ratio_B, py::arg("sr"), py::arg("s0"), py::arg("s_target"));
  m.def("best_constant_twocomp", &best_constant_twocomp, py::arg("scenario"), py::arg("law"));
  m.def("phi", &phi, py::arg("law"), py::arg("s1"), py::arg("s2"), py::arg("gamma"),
        py::arg("sr"));
  m.def("psi", &psi, py::arg("law"), py::arg("s1"), py::arg("s2"), py::arg("gamma"));
  m.def("argmax_phi", &argmax_phi, py::arg("law"), py::arg("s1"), py::arg("s2"),
        py::arg("gamma"));
  m.def("bar_s2", &bar_s2, py::arg("scenario"), py::arg("law"));
  m.def("switching_set_contains", &switching_set_contains, py::arg("s1_0"), py::arg("s2_0"),
        py::arg("scenario"), py::arg("law"));
  m.def(
      "estimate_alpha2",
      [](double slope, double s2_0, double sr, const GrowthLaw& law, double alpha) {
        const auto e = estimate_alpha2(slope, s2_0, sr, law, alpha);
        return py::make_tuple(e.alpha2, e.one_compartment_suits);
      },
      py::arg("s2_slope_0"), py::arg("s2_0"), py::arg("sr_applied"), py::arg("law"),
      py::arg("alpha_reference"));

  py::class_<SynthesisField, std::shared_ptr<SynthesisField>>(m, "SynthesisField")
      .def_static(
          "build",
          [](const TwoCompScenario& s, const GrowthLaw& law, std::size_t grid_size) {
            SynthesisOptions o;
            o.grid_size = grid_size;
            return std::make_shared<SynthesisField>(SynthesisField::build(s, law, o));
          },
          py::arg("scenario"), py::arg("law"), py::arg("grid_size") = 64)
      .def("query", &SynthesisField::query, py::arg("s1"), py::arg("s2"))
      .def("save", &SynthesisField::save, py::arg("dir"))
      .def_property_readonly("n_extremals",
                             [](const SynthesisField& f) { return f.extremals().size(); })
      .def_property_readonly("bar_s2", &SynthesisField::bar_s2_value);

  m.def(
      "solve_optimal_twocomp",
      [](const TwoCompScenario& s, const GrowthLaw& law, std::shared_ptr<SynthesisField> f) {
        const auto run = solve_optimal_twocomp(s, law, std::move(f));
        py::dict d = trajectory_dict(run.trajectory);
        d["switch_time"] = run.switch_time ? py::cast(*run.switch_time) : py::none();
        d["s2_switch"] = run.s2_switch;
        return d;
      },
      py::arg("scenario"), py::arg("law"), py::arg("field"));

  py::class_<ValueGrid>(m, "ValueGrid")
      .def("value_at", &ValueGrid::value_at, py::arg("x"))
      .def("policy_at", &ValueGrid::policy_at, py::arg("x"))
      .def_property_readonly("sweeps", &ValueGrid::sweeps)
      .def("to_csv", [](const ValueGrid& g) {
        std::ostringstream os;
        g.write_csv(os);
        return os.str();
      });

  m.def(
      "hjb_solve_homogeneous",
      [](const HomogeneousScenario& s, const GrowthLaw& law, std::size_t nodes, double s_max,
         std::size_t controls) {
        HjbOptions o;
        o.controls = controls;
        return hjb_solve_homogeneous(s, law, nodes, s_max, o);
      },
      py::arg("scenario"), py::arg("law"), py::arg("nodes"), py::arg("s_max"),
      py::arg("controls") = 200);
  m.def(
      "hjb_solve_twocomp",
      [](const TwoCompScenario& s, const GrowthLaw& law, std::size_t n1, std::size_t n2,
         double s1_max, double s2_min, std::size_t controls) {
        HjbOptions o;
        o.controls = controls;
        return hjb_solve_twocomp(s, law, n1, n2, s1_max, s2_min, o);
      },
      py::arg("scenario"), py::arg("law"), py::arg("n1"), py::arg("n2"), py::arg("s1_max"),
      py::arg("s2_min"), py::arg("controls") = 200);
  m.def(
      "greedy_rollout",
      [](const ValueGrid& g, const State& x0) { return trajectory_dict(greedy_rollout(g, x0)); },
      py::arg("grid"), py::arg("x0"));
}
