#include <doctest.h>

#include <cmath>

#include "bioremed/errors.hpp"
#include "bioremed/scalar.hpp"

using namespace bioremed;

TEST_CASE("bisect_root") {
  const double r = bisect_root([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-15);
  CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  const double rr = bisect_root([](double x) { return std::log(x) - 5.0; }, 1.0, 1e4, 1e-14,
                                200, true);
  CHECK(std::abs(rr - std::exp(5.0)) <= 1e-12 * std::exp(5.0));
  CHECK(bisect_root([](double x) { return x; }, 0.0, 1.0, 1e-12) == 0.0);
  CHECK_THROWS_AS(bisect_root([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-12),
                  NumericError);
}

TEST_CASE("golden_section on a unimodal function") {
  const auto m = golden_section([](double x) { return (x - 0.3) * (x - 0.3) + 1.0; }, 0.0, 1.0,
                                1e-10);
  // Comparisons of function values resolve a smooth minimum to ~sqrt(eps).
  CHECK(std::abs(m.x - 0.3) < 3e-8);
  CHECK(m.fx == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("minimize_guarded counts minima and finds the global one") {
  const auto uni = minimize_guarded([](double x) { return std::cosh(x - 0.25); }, 0.0, 1.0, 1e-12);
  CHECK(uni.unimodal());
  CHECK(std::abs(uni.x - 0.25) < 3e-8);

  // Two wells; the right one is deeper.
  auto two = [](double x) {
    return -std::exp(-200.0 * (x - 0.2) * (x - 0.2)) - 1.5 * std::exp(-200.0 * (x - 0.7) * (x - 0.7));
  };
  const auto m = minimize_guarded(two, 0.0, 1.0, 1e-12);
  CHECK_FALSE(m.unimodal());
  CHECK(m.local_minima == 2);
  CHECK(std::abs(m.x - 0.7) < 1e-5);

  // Infinite sentinel near the ends is tolerated.
  auto edge = [](double x) { return x < 0.1 ? INFINITY : (x - 0.5) * (x - 0.5); };
  CHECK(std::abs(minimize_guarded(edge, 0.0, 1.0, 1e-12).x - 0.5) < 1e-8);
  CHECK_THROWS_AS(minimize_guarded(edge, 1.0, 0.0, 1e-12), DomainError);
}
