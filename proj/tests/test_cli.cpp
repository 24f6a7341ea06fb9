#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <fstream>
#include <sstream>

#include "bioremed/sim.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "test_util.hpp"

using namespace bioremed;
using namespace bioremed::cli;
namespace fs = std::filesystem;

namespace {

const char* kBaseline = R"(# comment
[scenario]
model = homogeneous
V = 1000
V_r = 1
S0 = 1
S_target = 0.1

[law]
law = monod
mu_max = 1
K = 1

[strategy]
strategy = feedback
)";

const char* kTwoComp = R"([scenario]
model = twocomp
V = 1000
p = 0.4
V_r = 1
S0 = 1
S_target = 0.1
[strategy]
strategies = synthesized, feedback-s1, feedback-s2
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

int run_cli(const std::string& cmd, const ConfigDoc& doc, const fs::path& out, std::string* err = nullptr,
            unsigned jobs = 1) {
  std::ostringstream o, e;
  Settings s;
  s.out_dir = out.string();
  s.jobs = jobs;
  const int code = execute(cmd, doc, s, o, e);
  if (err) *err = e.str();
  return code;
}

}  // namespace

TEST_CASE("config parsing and diagnostics") {
  const auto doc = ConfigDoc::parse(kBaseline, "base.ini");
  const auto cfg = resolve(doc);
  CHECK(cfg.scenario.model == Model::kHomogeneous);
  CHECK(cfg.scenario.homogeneous->s_target == 0.1);
  CHECK(cfg.strategy == "feedback");

  try {
    ConfigDoc::parse("[scenario]\nV = 1\nbogus = 2\n", "f.ini");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("f.ini:3") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(ConfigDoc::parse("[nope]\n", "f.ini"), ConfigError);
  CHECK_THROWS_AS(ConfigDoc::parse("V = 1\n", "f.ini"), ConfigError);
  CHECK_THROWS_AS(ConfigDoc::parse("[scenario]\nV = 1\nV = 2\n", "f.ini"), ConfigError);

  auto bad = ConfigDoc::parse(kBaseline, "base.ini");
  bad.apply_override("V=abc");
  try {
    resolve(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("--set V") != std::string::npos);
  }
}

TEST_CASE("overrides win over the file") {
  auto doc = ConfigDoc::parse(kBaseline, "base.ini");
  doc.apply_override("scenario.S_target=0.01");
  doc.apply_override("K=2");
  const auto cfg = resolve(doc);
  CHECK(cfg.scenario.homogeneous->s_target == 0.01);
  CHECK(std::get<MonodParams>(cfg.scenario.law.params()).K == 2.0);
  CHECK_THROWS_AS(doc.apply_override("nokey=1"), ConfigError);
  CHECK_THROWS_AS(doc.apply_override("missing_equals"), ConfigError);
}

TEST_CASE("scenario validation errors") {
  auto doc = ConfigDoc::parse(kBaseline, "base.ini");
  doc.apply_override("S_target=1.5");
  CHECK_THROWS_AS(resolve(doc), ConfigError);

  auto tc = ConfigDoc::parse(kTwoComp, "tc.ini");
  tc.apply_override("p=0.001");
  CHECK_THROWS_AS(resolve(tc), ConfigError);
  tc.apply_override("allow_small_p=true");
  CHECK(resolve(tc).scenario.model == Model::kTwoComp);

  auto zero = ConfigDoc::parse(kTwoComp, "tc.ini");
  zero.apply_override("p=0");
  CHECK(resolve(zero).scenario.model == Model::kHomogeneous);

  auto unknown = ConfigDoc::parse(kBaseline, "base.ini");
  unknown.apply_override("strategy=magic");
  CHECK_THROWS_AS(resolve(unknown), ConfigError);
}

TEST_CASE("run is deterministic and writes its artifacts") {
  const auto doc = ConfigDoc::parse(kBaseline, "base.ini");
  const auto a = test_util::scratch_dir("run_a");
  const auto b = test_util::scratch_dir("run_b");
  REQUIRE(run_cli("run", doc, a) == 0);
  REQUIRE(run_cli("run", doc, b) == 0);
  for (const char* f : {"trajectory_feedback.csv", "summary.csv"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto summary = read_csv(a / "summary.csv");
  REQUIRE(summary.size() == 2);
  CHECK(summary[0] == std::vector<std::string>{"strategy", "model", "description", "Sr0", "Q0",
                                               "hit_time"});
  CHECK(std::stod(summary[1][5]) == doctest::Approx(40424.69).epsilon(1e-6));

  // The trajectory CSV re-parses to records that serialize identically.
  std::ifstream in(a / "trajectory_feedback.csv");
  const auto table = read_trajectory_csv(in);
  Trajectory t;
  t.samples = table.samples;
  std::ostringstream again;
  write_trajectory_csv(again, t, table.state_names);
  CHECK(again.str() == slurp(a / "trajectory_feedback.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("invalid configuration yields a machine-readable error and nonzero exit") {
  auto doc = ConfigDoc::parse(kBaseline, "base.ini");
  doc.apply_override("S_target=2");
  const auto out = test_util::scratch_dir("bad");
  std::string err;
  CHECK(run_cli("run", doc, out, &err) != 0);
  CHECK(err.find("\"status\": \"error\"") != std::string::npos);
  CHECK(err.find("\"kind\": \"config\"") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("compare orders the two-compartment strategies") {
  const auto doc = ConfigDoc::parse(kTwoComp, "tc.ini");
  const auto out = test_util::scratch_dir("compare");
  REQUIRE(run_cli("compare", doc, out, nullptr, 3) == 0);
  const auto rows = read_csv(out / "comparison.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"strategy", "hit_time", "ratio_to_best"});
  CHECK(rows[1][0] == "synthesized");
  CHECK(std::stod(rows[1][2]) == 1.0);
  CHECK(std::stod(rows[2][2]) > 1.0);
  CHECK(std::stod(rows[3][2]) > 1.0);

  auto single = ConfigDoc::parse(kTwoComp, "tc.ini");
  single.apply_override("strategies=feedback-s1");
  REQUIRE(run_cli("compare", single, out) == 0);
  CHECK(read_csv(out / "comparison.csv").size() == 2);
  fs::remove_all(out);
}

TEST_CASE("homogeneous compare reproduces the constant/feedback ratio") {
  auto doc = ConfigDoc::parse(kBaseline, "base.ini");
  doc.apply_override("S_target=0.01");
  doc.apply_override("strategies=feedback, best-constant");
  const auto out = test_util::scratch_dir("ratio");
  REQUIRE(run_cli("compare", doc, out) == 0);
  const auto rows = read_csv(out / "comparison.csv");
  const double ratio = std::stod(rows[2][2]);
  CHECK(ratio >= 1.6);
  CHECK(ratio <= 2.4);
  fs::remove_all(out);
}

TEST_CASE("sweep produces the long-form table") {
  auto doc = ConfigDoc::parse(kTwoComp, "tc.ini");
  doc.apply_override("strategies=best-constant, synthesized");
  doc.apply_override("sweep.S_target=0.01, 0.05, 0.1, 0.5");
  doc.apply_override("sweep.p=0, 0.25, 0.5");
  const auto out = test_util::scratch_dir("sweep");
  REQUIRE(run_cli("sweep", doc, out, nullptr, 4) == 0);
  const auto rows = read_csv(out / "sweep.csv");
  REQUIRE(rows.size() == 1 + 4 * 3 * 2);
  CHECK(rows[0] == std::vector<std::string>{"param", "value", "strategy", "hit_time"});
  // Per (p, strategy), hit time grows as S_target shrinks.
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>> curves;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto semi = rows[i][1].find(';');
    const double st = std::stod(rows[i][1].substr(0, semi));
    curves[{rows[i][1].substr(semi + 1), rows[i][2]}].emplace_back(st, std::stod(rows[i][3]));
  }
  CHECK(curves.size() == 6);
  for (auto& [key, pts] : curves) {
    std::sort(pts.begin(), pts.end());
    for (std::size_t k = 1; k < pts.size(); ++k) CHECK(pts[k].second < pts[k - 1].second);
  }
  // Same run with one job writes the same file.
  const auto out1 = test_util::scratch_dir("sweep1");
  REQUIRE(run_cli("sweep", doc, out1, nullptr, 1) == 0);
  CHECK(slurp(out / "sweep.csv") == slurp(out1 / "sweep.csv"));
  fs::remove_all(out);
  fs::remove_all(out1);
}

TEST_CASE("sweep failures keep completed rows and report errors") {
  auto doc = ConfigDoc::parse(kTwoComp, "tc.ini");
  doc.apply_override("strategies=feedback-s1");
  doc.apply_override("sweep.p=0.4, 0, 0.25");  // p = 0 has no second compartment
  const auto out = test_util::scratch_dir("sweep_fail");
  std::string err;
  CHECK(run_cli("sweep", doc, out, &err) != 0);
  const auto rows = read_csv(out / "sweep.csv");
  CHECK(rows.size() == 3);
  CHECK(err.find("p=0 ") != std::string::npos);

  auto empty = ConfigDoc::parse(kTwoComp, "tc.ini");
  CHECK(run_cli("sweep", empty, out) != 0);
  empty.apply_override("sweep.p=");
  CHECK_THROWS_AS(resolve(empty), ConfigError);
  fs::remove_all(out);
}

TEST_CASE("synthesize writes a loadable bundle") {
  const auto doc = ConfigDoc::parse(kTwoComp, "tc.ini");
  const auto out = test_util::scratch_dir("synth");
  REQUIRE(run_cli("synthesize", doc, out, nullptr, 2) == 0);
  CHECK(fs::exists(out / "synthesis" / "index.csv"));
  CHECK(read_csv(out / "synthesis" / "index.csv").size() == 65);
  CHECK(run_cli("synthesize", ConfigDoc::parse(kBaseline, "b.ini"), out) != 0);
  fs::remove_all(out);
}

TEST_CASE("certify the homogeneous feedback") {
  auto doc = ConfigDoc::parse(kBaseline, "base.ini");
  doc.apply_override("hjb_nodes=800");
  const auto out = test_util::scratch_dir("certify");
  REQUIRE(run_cli("certify", doc, out) == 0);
  const auto rows = read_csv(out / "certify.csv");
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][5] == "true");
  CHECK(fs::exists(out / "value_grid.csv"));
  fs::remove_all(out);
}
