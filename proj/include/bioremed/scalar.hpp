#pragma once

#include <cstddef>
#include <functional>

namespace bioremed {

using ScalarFn = std::function<double(double)>;

/// Root of f on [a, b] by bisection. f(a) and f(b) must have opposite signs
/// (a zero at either end is returned as-is). Stops when the bracket width is
/// below tol (scaled by |midpoint| when relative is set) or after max_iter.
double bisect_root(const ScalarFn& f, double a, double b, double tol, int max_iter = 200,
                   bool relative = false);

struct ScalarMin {
  double x;
  double fx;
};

/// Golden-section search on [a, b]; f assumed unimodal there.
ScalarMin golden_section(const ScalarFn& f, double a, double b, double tol, int max_iter = 500);

struct GuardedMin {
  double x;
  double fx;
  // Number of strict local minima seen on the guard grid.
  std::size_t local_minima;
  bool unimodal() const { return local_minima == 1; }
};

/// Minimizes f on the open interval (a, b).
///
/// A uniform guard grid of guard_points interior points locates the bracket of
/// the smallest sample and counts local minima; golden-section then refines
/// inside that bracket. When the scan finds several minima the bracket of the
/// global grid minimum is used (full grid-search fallback). A second scan with
/// check_points samples cross-checks the refined value.
GuardedMin minimize_guarded(const ScalarFn& f, double a, double b, double tol,
                            std::size_t guard_points = 1000, std::size_t check_points = 10000);

}  // namespace bioremed
