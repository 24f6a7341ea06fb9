#include "bioremed/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "bioremed/errors.hpp"
#include "bioremed/homogeneous.hpp"

namespace bioremed {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double lerp(double a, double b, double w) { return a + (b - a) * w; }
}  // namespace

ExtremalPoint Extremal::at(double s1) const {
  if (s1 <= points.front().s1) return points.front();
  if (s1 >= points.back().s1) return points.back();
  auto it = std::upper_bound(points.begin(), points.end(), s1,
                             [](double v, const ExtremalPoint& p) { return v < p.s1; });
  const ExtremalPoint& hi = *it;
  const ExtremalPoint& lo = *(it - 1);
  const double w = (s1 - lo.s1) / (hi.s1 - lo.s1);
  return {s1, lerp(lo.s2, hi.s2, w), lerp(lo.gamma, hi.gamma, w), lerp(lo.sr_opt, hi.sr_opt, w),
          lerp(lo.time_to_go, hi.time_to_go, w)};
}

std::vector<double> synthesis_anchors(double s_target, std::size_t n, double top_fraction,
                                      double bottom_fraction) {
  if (n < 2) throw std::invalid_argument("synthesis needs at least two anchors");
  // Gaps to S_target are geometric, so anchors cluster near S_target.
  const double g_max = s_target * (1.0 - bottom_fraction);
  const double g_min = s_target * (1.0 - top_fraction);
  std::vector<double> anchors(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = static_cast<double>(k) / static_cast<double>(n - 1);
    anchors[k] = s_target - g_max * std::pow(g_min / g_max, w);
  }
  return anchors;
}

Extremal integrate_extremal(const TwoCompScenario& scn, const GrowthLaw& law, double anchor,
                            double s1_max, double rtol) {
  const double a1 = scn.alpha1();
  const double a2 = scn.alpha2();
  const double st = scn.s_target;

  // Time-reversed state/costate-ratio dynamics in (S1, S2, gamma).
  ControlledSystem sys;
  sys.state_names = {"S1", "S2", "gamma"};
  sys.field = [a1, a2, law](const State& x, double u) {
    const double m = law.mu(u);
    return State{-a1 * m * (x[1] - x[0]), -a2 * m * (u - x[1]),
                 -m * ((a2 - a1) * x[2] - a2)};
  };
  sys.control_bounds = [](const State& x) { return std::pair{0.0, x[1]}; };
  sys.flow = [](double u) { return u; };

  StateFeedback control{[law](const State& x) {
    const double s1 = x[0], s2 = x[1];
    // On the diagonal phi reduces to a multiple of mu(S_r)(S2 - S_r).
    if (!(s1 - s2 > 1e-14 * s1)) return feedback_optimal(law, s2);
    return argmax_phi(law, s1, s2, std::max(x[2], 0.0));
  }};
  TargetFunction stop = [s1_max](const State& x) {
    return std::min(s1_max - x[0], x[0] - x[1]);
  };

  const double rate = a1 * law.mu(anchor);
  const double horizon = 20.0 * std::log((s1_max - anchor) / (st - anchor)) / rate;
  IntegrateOptions opts;
  opts.rtol = rtol;
  opts.atol = 1e-14 * st;
  opts.max_step = horizon / 4000.0;
  opts.control_floor = 1e-12 * anchor;
  const Trajectory tr = integrate(sys, control, State{st, anchor, 0.0}, stop, horizon, opts);
  if (!tr.reached_target()) {
    std::ostringstream os;
    os << "extremal with anchor " << anchor << " did not reach S1_max or the diagonal";
    throw SynthesisError(os.str());
  }

  Extremal ex{anchor, {}, false};
  ex.points.reserve(tr.samples.size());
  for (const auto& s : tr.samples) {
    if (!ex.points.empty() && !(s.x[0] > ex.points.back().s1)) continue;
    ExtremalPoint p{s.x[0], std::min(s.x[1], s.x[0]), s.x[2], std::min(s.sr, s.x[1]), s.t};
    ex.points.push_back(p);
  }
  const auto& last = ex.points.back();
  ex.reaches_diagonal = last.s1 - last.s2 <= 1e-9 * last.s1 && last.s1 < s1_max;
  return ex;
}

SynthesisField::SynthesisField(TwoCompScenario scn, GrowthLaw law,
                               std::vector<Extremal> extremals, double s1_max)
    : scn_(scn),
      law_(std::move(law)),
      extremals_(std::move(extremals)),
      s1_max_(s1_max),
      bar_s2_(bar_s2(scn_, law_)) {}

SynthesisField SynthesisField::build(const TwoCompScenario& scn, const GrowthLaw& law,
                                     const SynthesisOptions& opts) {
  scn.validate();
  if (opts.grid_size < 16) throw std::invalid_argument("synthesis grid_size must be >= 16");
  const double s1_max = opts.s1_max > 0.0 ? opts.s1_max : 1.05 * scn.s1_0;
  if (!(s1_max > scn.s_target)) throw std::invalid_argument("s1_max must exceed S_target");

  const auto anchors =
      synthesis_anchors(scn.s_target, opts.grid_size, opts.top_anchor, opts.bottom_anchor);
  std::vector<Extremal> extremals(anchors.size());
  std::vector<std::exception_ptr> errors(anchors.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < anchors.size(); k = next++) {
      try {
        extremals[k] = integrate_extremal(scn, law, anchors[k], s1_max, opts.rtol);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  unsigned n_threads = opts.threads ? opts.threads : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(anchors.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SynthesisField field(scn, law, std::move(extremals), s1_max);
  field.check_consistency();
  return field;
}

void SynthesisField::check_consistency() const {
  const double tol = 1e-12 * scn_.s_target;
  for (const auto& ex : extremals_) {
    for (const auto& p : ex.points) {
      if (p.s2 > p.s1 + tol || p.s2 <= 0.0 || p.gamma < -tol) {
        std::ostringstream os;
        os << "extremal with anchor " << ex.anchor << " leaves the admissible domain at S1="
           << p.s1;
        throw SynthesisError(os.str());
      }
    }
  }
  for (std::size_t k = 0; k + 1 < extremals_.size(); ++k) {
    const Extremal& lo = extremals_[k];
    const Extremal& hi = extremals_[k + 1];
    const double common = std::min(lo.s1_end(), hi.s1_end());
    auto check = [&](double s1) {
      if (s1 > common) return;
      const double gap = hi.at(s1).s2 - lo.at(s1).s2;
      // Both may touch the diagonal at the same S1 only at their ends.
      if (gap <= 0.0 && !(s1 == common && (lo.reaches_diagonal || hi.reaches_diagonal))) {
        std::ostringstream os;
        os << "extremals with anchors " << lo.anchor << " and " << hi.anchor
           << " cross near S1=" << s1;
        throw SynthesisError(os.str());
      }
    };
    for (const auto& p : lo.points) check(p.s1);
    for (const auto& p : hi.points) check(p.s1);
  }
}

struct SynthesisField::Bracket {
  double deficit;  // S2 - S_r
  double time;
};

SynthesisField::Bracket SynthesisField::bracket(double s1, double s2) const {
  // Extremals are ordered by anchor; at fixed S1 their S2 values increase.
  const ExtremalPoint* below = nullptr;
  ExtremalPoint below_pt{}, above_pt{};
  bool have_above = false;
  for (const auto& ex : extremals_) {
    if (s1 > ex.s1_end()) continue;
    const ExtremalPoint p = ex.at(s1);
    if (p.s2 <= s2) {
      below_pt = p;
      below = &below_pt;
    } else {
      above_pt = p;
      have_above = true;
      break;
    }
  }
  auto deficit = [](const ExtremalPoint& p) { return p.s2 - p.sr_opt; };

  if (!below) {
    // Below the lowest extremal: all constant arcs, zero deficit at S2 = 0.
    const double w = have_above ? s2 / above_pt.s2 : 0.0;
    return {w * (have_above ? deficit(above_pt) : 0.0),
            have_above ? above_pt.time_to_go : kNaN};
  }
  if (have_above) {
    const double w = (s2 - below->s2) / (above_pt.s2 - below->s2);
    return {lerp(deficit(*below), deficit(above_pt), w),
            lerp(below->time_to_go, above_pt.time_to_go, w)};
  }
  // Between the highest extremal defined at S1 and the diagonal, where the
  // optimal control is the homogeneous feedback on S1.
  const double span = s1 - below->s2;
  const double w = span > 0.0 ? (s2 - below->s2) / span : 1.0;
  const double diag_deficit = s1 - feedback_optimal(law_, s1);

  double diag_time = kNaN;
  const Extremal* prev = nullptr;
  for (const auto& ex : extremals_) {
    if (!ex.reaches_diagonal) continue;
    // Diagonal end points move toward S_target as the anchor rises.
    if (ex.s1_end() <= s1) {
      if (prev) {
        const auto& a = ex.points.back();
        const auto& b = prev->points.back();
        const double wd = (s1 - a.s1) / (b.s1 - a.s1);
        diag_time = lerp(a.time_to_go, b.time_to_go, wd);
      }
      break;
    }
    prev = &ex;
  }
  return {lerp(deficit(*below), diag_deficit, w), lerp(below->time_to_go, diag_time, w)};
}

double SynthesisField::query_interpolated(double s1, double s2) const {
  if (s1 > s1_max_ * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "state S1=" << s1 << " above synthesized range " << s1_max_ << "; extend field";
    throw ExtendFieldError(os.str());
  }
  if (!(s2 > 0.0)) return 0.0;
  s2 = std::min(s2, s1);
  if (s1 <= scn_.s_target) return s2;
  const double sr = s2 - bracket(s1, s2).deficit;
  return std::clamp(sr, 0.0, s2);
}

double SynthesisField::query(double s1, double s2) const {
  if (s1 > s1_max_ * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "state S1=" << s1 << " above synthesized range " << s1_max_ << "; extend field";
    throw ExtendFieldError(os.str());
  }
  if (in_switching_set(s1, s2, scn_, law_, bar_s2_)) return s2;
  return query_interpolated(s1, s2);
}

double SynthesisField::time_to_go(double s1, double s2) const {
  if (s1 > s1_max_ * (1.0 + 1e-12)) throw ExtendFieldError("time_to_go: extend field");
  if (s1 <= scn_.s_target) return 0.0;
  return bracket(s1, std::min(s2, s1)).time;
}

void SynthesisField::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream index(fs::path(dir) / "index.csv");
  if (!index) throw std::runtime_error("cannot write synthesis index in " + dir);
  index << "anchor,file\n";
  for (std::size_t k = 0; k < extremals_.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "extremal_%03zu.csv", k);
    index << format_number(extremals_[k].anchor) << ',' << name << '\n';
    std::ofstream os(fs::path(dir) / name);
    if (!os) throw std::runtime_error(std::string("cannot write ") + name);
    os << "S1,S2,gamma,Sr_opt\n";
    for (const auto& p : extremals_[k].points) {
      os << format_number(p.s1) << ',' << format_number(p.s2) << ',' << format_number(p.gamma)
         << ',' << format_number(p.sr_opt) << '\n';
    }
  }
}

SynthesisField SynthesisField::load(const std::string& dir, const TwoCompScenario& scn,
                                    const GrowthLaw& law) {
  namespace fs = std::filesystem;
  std::ifstream index(fs::path(dir) / "index.csv");
  if (!index) throw std::runtime_error("missing synthesis index in " + dir);
  std::string line;
  std::getline(index, line);
  if (line != "anchor,file") throw std::runtime_error("bad synthesis index header");
  std::vector<Extremal> extremals;
  double s1_max = scn.s_target;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("bad synthesis index row");
    Extremal ex{std::stod(line.substr(0, comma)), {}, false};
    std::ifstream is(fs::path(dir) / line.substr(comma + 1));
    if (!is) throw std::runtime_error("missing extremal file " + line.substr(comma + 1));
    std::string row;
    std::getline(is, row);
    if (row != "S1,S2,gamma,Sr_opt") throw std::runtime_error("bad extremal header");
    while (std::getline(is, row)) {
      if (row.empty()) continue;
      std::stringstream ss(row);
      std::string c;
      double v[4];
      for (double& x : v) {
        if (!std::getline(ss, c, ',')) throw std::runtime_error("short extremal row");
        x = std::stod(c);
      }
      ex.points.push_back({v[0], v[1], v[2], v[3], kNaN});
    }
    if (ex.points.empty()) throw std::runtime_error("empty extremal file");
    const auto& last = ex.points.back();
    s1_max = std::max(s1_max, last.s1);
    extremals.push_back(std::move(ex));
  }
  for (auto& ex : extremals) {
    const auto& last = ex.points.back();
    ex.reaches_diagonal = last.s1 - last.s2 <= 1e-9 * last.s1 && last.s1 < s1_max;
  }
  std::sort(extremals.begin(), extremals.end(),
            [](const Extremal& a, const Extremal& b) { return a.anchor < b.anchor; });
  SynthesisField field(scn, law, std::move(extremals), s1_max);
  field.check_consistency();
  return field;
}

TwoCompOptimalRun solve_optimal_twocomp(const TwoCompScenario& scn, const GrowthLaw& law,
                                        std::shared_ptr<const SynthesisField> field,
                                        const IntegrateOptions& opts) {
  scn.validate();
  if (!field) throw std::invalid_argument("solve_optimal_twocomp: null field");
  TwoCompOptimalRun run;
  run.trajectory = integrate(twocomp_system(scn, law), SynthesizedControl{field},
                             State{scn.s1_0, scn.s2_0}, twocomp_target(scn),
                             default_horizon(scn, law), opts);
  const double bar = field->bar_s2_value();
  for (const auto& s : run.trajectory.samples) {
    if (in_switching_set(s.x[0], s.x[1], scn, law, bar)) {
      run.switch_time = s.t;
      run.s2_switch = s.x[1];
      break;
    }
  }
  return run;
}

}  // namespace bioremed
