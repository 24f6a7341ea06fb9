#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bioremed/errors.hpp"
#include "bioremed/homogeneous.hpp"
#include "bioremed/oracle.hpp"
#include "bioremed/synthesis.hpp"
#include "bioremed/twocomp.hpp"

namespace bioremed::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return format_number(v); }

IntegrateOptions integrate_options(const Numerics& n) {
  IntegrateOptions o;
  o.rtol = n.rtol;
  return o;
}

HjbOptions hjb_options(const Numerics& n) {
  HjbOptions o;
  o.controls = n.hjb_controls;
  return o;
}

SynthesisOptions synthesis_options(const Numerics& n, unsigned threads = 1) {
  SynthesisOptions o;
  o.grid_size = n.grid_size;
  o.rtol = std::min(n.rtol, 1e-10);
  o.threads = threads;
  return o;
}

ValueGrid oracle_grid(const RunConfig& cfg) {
  const auto& n = cfg.numerics;
  const auto& law = cfg.scenario.law;
  if (cfg.scenario.model == Model::kHomogeneous) {
    const auto& h = *cfg.scenario.homogeneous;
    return hjb_solve_homogeneous(h, law, n.hjb_nodes, n.hjb_margin * h.s0, hjb_options(n));
  }
  const auto& t = *cfg.scenario.twocomp;
  const double s2_min = n.hjb_s2_min * t.s_target;
  if (t.s2_0 < s2_min) throw ConfigError("[numerics]: hjb_s2_min lies above S2_0");
  return hjb_solve_twocomp(t, law, n.hjb_n1, n.hjb_n2, n.hjb_margin * t.s1_0, s2_min,
                           hjb_options(n));
}

State initial_state(const RunConfig& cfg) {
  if (cfg.scenario.model == Model::kHomogeneous) return {cfg.scenario.homogeneous->s0};
  return {cfg.scenario.twocomp->s1_0, cfg.scenario.twocomp->s2_0};
}

void fill_initial(StrategyResult& r) {
  if (r.trajectory.samples.empty()) return;
  r.sr0 = r.trajectory.samples.front().sr;
  r.q0 = r.trajectory.samples.front().q;
}

StrategyResult run_homogeneous(const RunConfig& cfg, const std::string& strategy) {
  const auto& h = *cfg.scenario.homogeneous;
  const auto& law = cfg.scenario.law;
  const auto opts = integrate_options(cfg.numerics);
  StrategyResult r;
  r.strategy = strategy;
  r.state_names = {"Sl"};
  if (strategy == "best-constant") {
    const auto best = best_constant(h, law);
    r.trajectory = simulate_constant(h, law, best.sr, opts);
    r.description = "constant S_r*=" + num(best.sr) + " Q*=" + num(best.q) +
                    " T_f(closed form)=" + num(best.tf) +
                    (best.unimodal ? "" : " (non-unimodal; grid fallback)");
  } else if (strategy == "feedback" || strategy == "synthesized") {
    r.trajectory = solve_feedback(h, law, opts);
    r.description = "optimal feedback argmax mu(s)(S_l - s)";
  } else if (strategy == "oracle") {
    const auto grid = oracle_grid(cfg);
    r.trajectory = greedy_rollout(grid, initial_state(cfg), opts);
    r.description = "HJB greedy rollout V(S0)=" + num(grid.value_at(initial_state(cfg))) +
                    " nodes=" + std::to_string(grid.axis1().size());
  } else {
    throw ConfigError("strategy '" + strategy + "' requires model = twocomp");
  }
  fill_initial(r);
  return r;
}

StrategyResult run_twocomp(const RunConfig& cfg, const std::string& strategy) {
  const auto& t = *cfg.scenario.twocomp;
  const auto& law = cfg.scenario.law;
  const auto opts = integrate_options(cfg.numerics);
  StrategyResult r;
  r.strategy = strategy;
  r.state_names = {"S1", "S2"};
  if (strategy == "best-constant") {
    if (t.s1_0 == t.s2_0) {
      const auto best = best_constant_twocomp(t, law);
      r.trajectory = simulate_constant_twocomp(t, law, best.sr, opts);
      r.description = "constant S_r*=" + num(best.sr) + " Q*=" + num(best.q) +
                      " T_f(tangency)=" + num(best.tf);
    } else {
      const auto best = best_constant_twocomp_simulated(t, law, opts);
      r.trajectory = simulate_constant_twocomp(t, law, best.sr, opts);
      r.description = "constant S_r=" + num(best.sr) + " Q=" + num(best.q) +
                      " (heuristic: unequal initial data)";
    }
  } else if (strategy == "feedback" || strategy == "synthesized") {
    auto field = std::make_shared<const SynthesisField>(
        SynthesisField::build(t, law, synthesis_options(cfg.numerics)));
    auto run = solve_optimal_twocomp(t, law, field, opts);
    r.trajectory = std::move(run.trajectory);
    r.description = "synthesized optimal feedback";
    if (run.switch_time) {
      r.description += " switch t=" + num(*run.switch_time) + " S2=" + num(run.s2_switch);
    }
  } else if (strategy == "feedback-s1" || strategy == "feedback-s2") {
    const int measured = strategy == "feedback-s1" ? 1 : 2;
    r.trajectory = simulate_single_measurement_feedback(t, law, measured, opts);
    r.description = "homogeneous feedback on measured S" + std::to_string(measured);
  } else if (strategy == "oracle") {
    const auto grid = oracle_grid(cfg);
    r.trajectory = greedy_rollout(grid, initial_state(cfg), opts);
    r.description = "HJB greedy rollout V(S1_0 S2_0)=" + num(grid.value_at(initial_state(cfg))) +
                    " grid=" + std::to_string(grid.axis1().size()) + "x" +
                    std::to_string(grid.axis2().size());
  } else {
    throw ConfigError("unknown strategy '" + strategy + "'");
  }
  fill_initial(r);
  return r;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are the
// callee's responsibility.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::string hit_field(const std::optional<double>& t) { return t ? num(*t) : ""; }

void write_summary(const fs::path& path, const std::vector<StrategyResult>& results,
                   const Scenario& scn) {
  std::ofstream os(path);
  os << "strategy,model,description,Sr0,Q0,hit_time\n";
  for (const auto& r : results) {
    os << r.strategy << ',' << (scn.model == Model::kHomogeneous ? "homogeneous" : "twocomp")
       << ',' << r.description << ',' << num(r.sr0) << ',' << num(r.q0) << ','
       << hit_field(r.hit_time()) << '\n';
  }
}

void print_result(std::ostream& out, const StrategyResult& r) {
  out << r.strategy << ": " << r.description << "; hit_time = "
      << (r.hit_time() ? num(*r.hit_time()) + " s" : std::string("not reached")) << '\n';
}

struct Context {
  const ConfigDoc& doc;
  RunConfig cfg;
  fs::path out_dir;
  unsigned jobs;
  std::ostream& out;
  std::vector<ErrorRecord> errors;
  std::mutex mutex;

  void fail(const std::string& where, std::exception_ptr e) {
    std::lock_guard lock(mutex);
    errors.push_back(describe_exception(where, e));
  }
};

void cmd_run(Context& ctx) {
  if (ctx.cfg.strategy.empty()) {
    throw ConfigError("run needs [strategy] strategy = NAME (several given; use compare)");
  }
  const auto r = run_strategy(ctx.cfg, ctx.cfg.strategy);
  write_trajectory_csv((ctx.out_dir / ("trajectory_" + r.strategy + ".csv")).string(),
                       r.trajectory, r.state_names);
  write_summary(ctx.out_dir / "summary.csv", {r}, ctx.cfg.scenario);
  print_result(ctx.out, r);
  if (!r.hit_time()) throw NumericError("target not reached within the horizon");
}

void cmd_compare(Context& ctx) {
  const auto& names = ctx.cfg.strategies;
  std::vector<std::optional<StrategyResult>> results(names.size());
  parallel_for(names.size(), ctx.jobs, [&](std::size_t i) {
    try {
      results[i] = run_strategy(ctx.cfg, names[i]);
    } catch (...) {
      ctx.fail(ctx.cfg.scenario.label + " strategy=" + names[i], std::current_exception());
    }
  });
  std::vector<StrategyResult> done;
  double best = std::numeric_limits<double>::infinity();
  for (auto& r : results) {
    if (!r) continue;
    if (r->hit_time()) best = std::min(best, *r->hit_time());
    write_trajectory_csv((ctx.out_dir / ("trajectory_" + r->strategy + ".csv")).string(),
                         r->trajectory, r->state_names);
    done.push_back(std::move(*r));
  }
  std::ofstream os(ctx.out_dir / "comparison.csv");
  os << "strategy,hit_time,ratio_to_best\n";
  for (const auto& r : done) {
    os << r.strategy << ',' << hit_field(r.hit_time()) << ','
       << (r.hit_time() ? num(*r.hit_time() / best) : "") << '\n';
    print_result(ctx.out, r);
  }
  write_summary(ctx.out_dir / "summary.csv", done, ctx.cfg.scenario);
}

void cmd_sweep(Context& ctx) {
  const auto& sweep = ctx.cfg.sweep;
  if (sweep.empty()) throw ConfigError("sweep: no swept key (add a [sweep] section or --set sweep.KEY=v1,v2)");

  // Cartesian product of swept values (first key varies slowest) x strategies.
  std::size_t combos = 1;
  for (const auto& [key, values] : sweep) combos *= values.size();
  const auto& strategies = ctx.cfg.strategies;
  const std::size_t cells = combos * strategies.size();

  std::string param;
  for (const auto& [key, values] : sweep) {
    param += (param.empty() ? "" : ";") + key.substr(key.find('.') + 1);
  }
  auto assignment = [&](std::size_t combo) {
    std::vector<std::string> picks(sweep.size());
    for (std::size_t k = sweep.size(); k-- > 0;) {
      picks[k] = sweep[k].second[combo % sweep[k].second.size()];
      combo /= sweep[k].second.size();
    }
    return picks;
  };

  std::ofstream os(ctx.out_dir / "sweep.csv");
  os << "param,value,strategy,hit_time\n" << std::flush;
  std::vector<std::optional<std::string>> rows(cells);
  std::vector<bool> finished(cells, false);
  std::size_t cursor = 0;
  std::mutex write_mutex;

  parallel_for(cells, ctx.jobs, [&](std::size_t cell) {
    const std::size_t combo = cell / strategies.size();
    const std::string& strategy = strategies[cell % strategies.size()];
    const auto picks = assignment(combo);
    std::string value;
    for (const auto& v : picks) value += (value.empty() ? "" : ";") + v;
    std::optional<std::string> row;
    try {
      ConfigDoc doc = ctx.doc;
      for (std::size_t k = 0; k < sweep.size(); ++k) {
        doc.apply_override(sweep[k].first + "=" + picks[k]);
      }
      const RunConfig cfg = resolve(doc);
      const auto r = run_strategy(cfg, strategy);
      if (!r.hit_time()) throw NumericError("target not reached within the horizon");
      row = param + "," + value + "," + strategy + "," + num(*r.hit_time());
    } catch (...) {
      ctx.fail("sweep " + param + "=" + value + " strategy=" + strategy,
               std::current_exception());
    }
    // Rows are emitted in cell order as soon as every earlier cell is done,
    // so a failure late in the sweep still leaves the completed prefix on disk.
    std::lock_guard lock(write_mutex);
    rows[cell] = std::move(row);
    finished[cell] = true;
    while (cursor < cells && finished[cursor]) {
      if (rows[cursor]) os << *rows[cursor] << '\n';
      ++cursor;
    }
    os.flush();
  });
  ctx.out << "sweep: " << cells << " cells (" << combos << " parameter sets x "
          << strategies.size() << " strategies) -> " << (ctx.out_dir / "sweep.csv").string()
          << '\n';
}

void cmd_synthesize(Context& ctx) {
  if (ctx.cfg.scenario.model != Model::kTwoComp) {
    throw ConfigError("synthesize requires model = twocomp with p > 0");
  }
  const auto& t = *ctx.cfg.scenario.twocomp;
  const auto field = SynthesisField::build(t, ctx.cfg.scenario.law,
                                           synthesis_options(ctx.cfg.numerics, ctx.jobs));
  const auto dir = ctx.out_dir / "synthesis";
  field.save(dir.string());
  std::size_t diagonal = 0;
  for (const auto& e : field.extremals()) diagonal += e.reaches_diagonal ? 1 : 0;
  ctx.out << "synthesis: " << field.extremals().size() << " extremals (" << diagonal
          << " reach S1 = S2), S1 up to " << num(field.s1_max()) << ", bar S2 = "
          << num(field.bar_s2_value()) << " -> " << dir.string() << '\n';
}

struct Check {
  std::string name;
  double analytic;
  double oracle;
  double tolerance;
  // "close": |oracle - analytic| <= tol analytic; "below": oracle <= (1 + tol) analytic.
  bool one_sided;

  double rel() const { return (oracle - analytic) / analytic; }
  bool pass() const {
    return one_sided ? oracle <= analytic * (1.0 + tolerance) : std::abs(rel()) <= tolerance;
  }
};

void cmd_certify(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const bool homogeneous = cfg.scenario.model == Model::kHomogeneous;
  const double tol = homogeneous ? cfg.numerics.certify_tol_1d : cfg.numerics.certify_tol_2d;

  const auto grid = oracle_grid(cfg);
  {
    std::ofstream os(ctx.out_dir / "value_grid.csv");
    grid.write_csv(os);
  }
  const State x0 = initial_state(cfg);
  const double v0 = grid.value_at(x0);
  const auto rollout = greedy_rollout(grid, x0, integrate_options(cfg.numerics));
  const auto optimal = run_strategy(cfg, homogeneous ? "feedback" : "synthesized");
  const auto constant = run_strategy(cfg, "best-constant");
  if (!optimal.hit_time() || !constant.hit_time() || !rollout.hit_time) {
    throw NumericError("certify: a reference run did not reach the target");
  }

  const std::vector<Check> checks = {
      {"value_vs_optimal", *optimal.hit_time(), v0, tol, false},
      {"rollout_vs_optimal", *optimal.hit_time(), *rollout.hit_time, tol, false},
      {"value_below_best_constant", *constant.hit_time(), v0, tol, true},
  };
  std::ofstream os(ctx.out_dir / "certify.csv");
  os << "check,analytic,oracle,rel_diff,tolerance,pass\n";
  for (const auto& c : checks) {
    os << c.name << ',' << num(c.analytic) << ',' << num(c.oracle) << ',' << num(c.rel()) << ','
       << num(c.tolerance) << ',' << (c.pass() ? "true" : "false") << '\n';
    ctx.out << "certify " << c.name << ": analytic " << num(c.analytic) << " oracle "
            << num(c.oracle) << " rel " << num(c.rel()) << (c.pass() ? " PASS" : " FAIL") << '\n';
    if (!c.pass()) {
      ctx.errors.push_back({cfg.scenario.label, "certification",
                            c.name + " outside tolerance " + num(c.tolerance)});
    }
  }
}

}  // namespace

StrategyResult run_strategy(const RunConfig& cfg, const std::string& strategy) {
  return cfg.scenario.model == Model::kHomogeneous ? run_homogeneous(cfg, strategy)
                                                   : run_twocomp(cfg, strategy);
}

ErrorRecord describe_exception(const std::string& context, std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& x) {
    return {context, "config", x.what()};
  } catch (const DomainError& x) {
    return {context, "domain", x.what()};
  } catch (const WashoutError& x) {
    return {context, "washout", x.what()};
  } catch (const IntegrationError& x) {
    std::ostringstream os;
    os << x.what() << " (last t = " << x.last_time() << ")";
    return {context, "integration", os.str()};
  } catch (const ExtendFieldError& x) {
    return {context, "extend-field", x.what()};
  } catch (const SynthesisError& x) {
    return {context, "synthesis", x.what()};
  } catch (const OracleError& x) {
    return {context, "oracle", x.what()};
  } catch (const NumericError& x) {
    return {context, "numeric", x.what()};
  } catch (const std::invalid_argument& x) {
    return {context, "invalid-argument", x.what()};
  } catch (const std::exception& x) {
    return {context, "error", x.what()};
  } catch (...) {
    return {context, "error", "unknown exception"};
  }
}

void print_error_summary(std::ostream& err, const std::string& command,
                         const std::vector<ErrorRecord>& errors) {
  nlohmann::json summary;
  summary["status"] = "error";
  summary["command"] = command;
  summary["errors"] = nlohmann::json::array();
  for (const auto& e : errors) {
    summary["errors"].push_back({{"context", e.context}, {"kind", e.kind}, {"message", e.message}});
  }
  err << summary.dump(2) << '\n';
}

int execute(const std::string& command, const ConfigDoc& doc, const Settings& settings,
            std::ostream& out, std::ostream& err) {
  std::vector<ErrorRecord> errors;
  try {
    RunConfig cfg = resolve(doc);
    Context ctx{doc, cfg, settings.out_dir.value_or(cfg.out_dir), std::max(1u, settings.jobs),
                out, {}, {}};
    for (const auto& w : cfg.scenario.homogeneous ? cfg.scenario.homogeneous->warnings()
                                                  : std::vector<std::string>{}) {
      err << "warning: " << w << '\n';
    }
    fs::create_directories(ctx.out_dir);
    try {
      if (command == "run") {
        cmd_run(ctx);
      } else if (command == "compare") {
        cmd_compare(ctx);
      } else if (command == "sweep") {
        cmd_sweep(ctx);
      } else if (command == "synthesize") {
        cmd_synthesize(ctx);
      } else if (command == "certify") {
        cmd_certify(ctx);
      } else {
        throw ConfigError("unknown command '" + command + "'");
      }
    } catch (...) {
      ctx.errors.push_back(describe_exception(cfg.scenario.label, std::current_exception()));
    }
    errors = std::move(ctx.errors);
  } catch (...) {
    errors.push_back(describe_exception("configuration", std::current_exception()));
  }
  if (errors.empty()) return 0;

  print_error_summary(err, command, errors);
  return 1;
}

}  // namespace bioremed::cli
