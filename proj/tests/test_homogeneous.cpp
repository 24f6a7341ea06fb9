#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bioremed/errors.hpp"
#include "bioremed/homogeneous.hpp"
#include "test_util.hpp"

using namespace bioremed;
using test_util::rel_err;

namespace {

const GrowthLaw kMonod = GrowthLaw::monod(1.0, 1.0);
const HomogeneousScenario kPaper{1000.0, 1.0, 1.0, 0.1};

// Brute-force argmin of f over n interior points of (a, b).
std::pair<double, double> grid_min(const std::function<double(double)>& f, double a, double b,
                                   int n) {
  double bx = a, bf = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= n; ++i) {
    const double x = a + (b - a) * i / (n + 1.0);
    const double v = f(x);
    if (v < bf) {
      bf = v;
      bx = x;
    }
  }
  return {bx, bf};
}

}  // namespace

TEST_CASE("scenario validation") {
  CHECK_NOTHROW(kPaper.validate());
  CHECK_THROWS_AS((HomogeneousScenario{1000.0, 1.0, 0.1, 0.1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((HomogeneousScenario{0.0, 1.0, 1.0, 0.1}.validate()), std::invalid_argument);
  CHECK(kPaper.warnings().empty());
  CHECK_FALSE((HomogeneousScenario{50.0, 1.0, 1.0, 0.1}.warnings().empty()));
}

TEST_CASE("closed-form constant-control time") {
  const double expected = (1.05 / 0.05) * std::log(19.0) / 0.001;
  CHECK(tf_constant(kPaper, kMonod, 0.05) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(expected == doctest::Approx(61833.2).epsilon(1e-6));
  CHECK_THROWS_AS(tf_constant(kPaper, kMonod, 0.0), DomainError);
  CHECK_THROWS_AS(tf_constant(kPaper, kMonod, 0.1), DomainError);
  CHECK(std::isinf(tf_constant_or_inf(kPaper, kMonod, 0.2)));
  // Grows without bound (logarithmically) toward the target level.
  double prev = 0.0;
  for (double gap : {1e-3, 1e-6, 1e-9, 1e-12}) {
    const double t = tf_constant(kPaper, kMonod, 0.1 - gap);
    CHECK(t > prev);
    prev = t;
  }
  CHECK(prev > 3.0 * tf_constant(kPaper, kMonod, 0.05));

  const auto sim = simulate_constant(kPaper, kMonod, 0.05);
  REQUIRE(sim.hit_time);
  CHECK(rel_err(*sim.hit_time, expected) < 1e-6);
}

TEST_CASE("best constant matches a fine grid search") {
  for (const auto& law : {kMonod, GrowthLaw::linear(0.3)}) {
    const auto best = best_constant(kPaper, law);
    const auto [gx, gf] =
        grid_min([&](double s) { return tf_constant(kPaper, law, s); }, 0.0, 0.1, 100000);
    CHECK(std::abs(best.sr - gx) <= 1e-4 * kPaper.s_target);
    CHECK(best.tf <= gf * (1.0 + 1e-12));
    CHECK(rel_err(best.tf, gf) < 1e-8);
    CHECK(best.unimodal);
    CHECK(best.q == doctest::Approx(kPaper.vr * law.mu(best.sr)).epsilon(1e-14));

    const double d = 1e-3 * kPaper.s_target;
    CHECK(best.tf <= tf_constant(kPaper, law, best.sr + d));
    CHECK(best.tf <= tf_constant(kPaper, law, best.sr - d));
  }
  const auto best = best_constant(kPaper, kMonod);
  CHECK(best.sr == doctest::Approx(0.078).epsilon(0.01));
  CHECK(best.tf == doctest::Approx(5.163e4).epsilon(1e-3));
}

TEST_CASE("best constant depends on the volume ratio only") {
  const auto a = best_constant(kPaper, kMonod);
  const auto b = best_constant(HomogeneousScenario{7000.0, 7.0, 1.0, 0.1}, kMonod);
  CHECK(rel_err(b.sr, a.sr) < 1e-9);
  CHECK(rel_err(b.tf, a.tf) < 1e-12);
}

TEST_CASE("T_f has a single local minimum on a 1000-point grid") {
  for (double st : {0.01, 0.1, 0.5}) {
    const HomogeneousScenario scn{1000.0, 1.0, 1.0, st};
    std::vector<double> f;
    for (int i = 1; i <= 1000; ++i) f.push_back(tf_constant(scn, kMonod, st * i / 1001.0));
    int minima = 0;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) minima += (f[i] < f[i - 1] && f[i] < f[i + 1]);
    CHECK(minima == 1);
  }
}

TEST_CASE("optimal feedback closed forms and bisection") {
  CHECK(feedback_optimal(GrowthLaw::linear(0.3), 1.0) == doctest::Approx(0.5));
  CHECK(feedback_optimal(kMonod, 1.0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
  const auto m = GrowthLaw::monod(2.0, 0.5);
  for (double sl : {0.1, 1.0, 10.0}) {
    const double closed = std::sqrt(0.25 + 0.5 * sl) - 0.5;
    CHECK(std::abs(feedback_optimal(m, sl) - closed) < 1e-12);
    CHECK(std::abs(feedback_optimal_bisection(m, sl) - closed) < 1e-9);
    CHECK(std::abs(feedback_optimal_bisection(GrowthLaw::linear(0.3), sl) - sl / 2.0) < 1e-9);

    // Independent argmax of mu(s)(S_l - s): coarse grid, then a local re-grid.
    auto neg = [&](double s) { return -m.mu(s) * (sl - s); };
    auto [x, fx] = grid_min(neg, 0.0, sl, 1000000);
    const double h = sl / 1000001.0;
    std::tie(x, fx) = grid_min(neg, x - h, x + h, 100000);
    // A sampled flat maximum is only resolved to ~sqrt(eps).
    CHECK(std::abs(feedback_optimal_bisection(m, sl) - x) < 1e-7 * std::max(1.0, sl));
  }
  CHECK_THROWS_AS(feedback_optimal(kMonod, 0.0), DomainError);
}

TEST_CASE("feedback law increases with the resource level") {
  double prev = 0.0;
  for (int i = 1; i <= 200; ++i) {
    const double s = feedback_optimal(kMonod, 0.05 * i);
    CHECK(s > prev);
    prev = s;
  }
}

TEST_CASE("optimal feedback trajectory") {
  const auto traj = solve_feedback(kPaper, kMonod);
  REQUIRE(traj.hit_time);
  const auto best = best_constant(kPaper, kMonod);
  CHECK(*traj.hit_time < best.tf);

  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    CHECK(traj.samples[i].q < traj.samples[i - 1].q);
  }

  std::mt19937_64 rng(3);
  for (std::size_t i = 0; i < traj.samples.size(); i += 10) {
    const auto& smp = traj.samples[i];
    const double sl = smp.x[0];
    const double best_rate = kMonod.mu(smp.sr) * (sl - smp.sr);
    std::uniform_real_distribution<double> u(0.0, sl);
    for (int k = 0; k < 100; ++k) {
      const double s = u(rng);
      CHECK(best_rate >= kMonod.mu(s) * (sl - s) * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("constant-to-feedback time ratio at S_target = 0.01") {
  const HomogeneousScenario scn{1000.0, 1.0, 1.0, 0.01};
  const double ratio = best_constant(scn, kMonod).tf / *solve_feedback(scn, kMonod).hit_time;
  MESSAGE("ratio = " << ratio);
  CHECK(ratio >= 1.6);
  CHECK(ratio <= 2.4);
}

TEST_CASE("feedback never loses to the best constant") {
  for (double st : {0.02, 0.2, 0.5, 0.9}) {
    for (const auto& law : {kMonod, GrowthLaw::monod(0.5, 3.0), GrowthLaw::linear(0.7)}) {
      const HomogeneousScenario scn{500.0, 1.0, 1.0, st};
      CHECK(*solve_feedback(scn, law).hit_time <= best_constant(scn, law).tf * (1.0 + 1e-9));
    }
  }
}
