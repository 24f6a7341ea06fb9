#include "bioremed/scalar.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "bioremed/errors.hpp"

namespace bioremed {

double bisect_root(const ScalarFn& f, double a, double b, double tol, int max_iter,
                   bool relative) {
  double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (std::signbit(fa) == std::signbit(fb)) {
    throw NumericError("bisect_root: no sign change on the bracket");
  }
  for (int i = 0; i < max_iter; ++i) {
    const double m = 0.5 * (a + b);
    const double scale = relative ? std::abs(m) : 1.0;
    if (b - a <= tol * scale || m == a || m == b) return m;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if (std::signbit(fm) == std::signbit(fa)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

ScalarMin golden_section(const ScalarFn& f, double a, double b, double tol, int max_iter) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? ScalarMin{c, fc} : ScalarMin{d, fd};
}

namespace {

struct Scan {
  std::size_t best;
  std::size_t minima;
  std::vector<double> xs;
  std::vector<double> fs;
};

Scan scan(const ScalarFn& f, double a, double b, std::size_t n) {
  Scan s{0, 0, std::vector<double>(n), std::vector<double>(n)};
  const double h = (b - a) / static_cast<double>(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    s.xs[i] = a + h * static_cast<double>(i + 1);
    s.fs[i] = f(s.xs[i]);
    if (s.fs[i] < s.fs[s.best]) s.best = i;
  }
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? s.fs[i - 1] : inf;
    const double right = i + 1 < n ? s.fs[i + 1] : inf;
    if (std::isfinite(s.fs[i]) && s.fs[i] < left && s.fs[i] <= right) ++s.minima;
  }
  return s;
}

ScalarMin refine(const ScalarFn& f, const Scan& s, double a, double b, double tol) {
  const std::size_t i = s.best;
  const double lo = i > 0 ? s.xs[i - 1] : a;
  const double hi = i + 1 < s.xs.size() ? s.xs[i + 1] : b;
  ScalarMin m = golden_section(f, lo, hi, tol);
  if (s.fs[i] < m.fx) m = {s.xs[i], s.fs[i]};
  return m;
}

}  // namespace

GuardedMin minimize_guarded(const ScalarFn& f, double a, double b, double tol,
                            std::size_t guard_points, std::size_t check_points) {
  if (!(b > a)) throw DomainError("minimize_guarded: empty interval");
  const Scan guard = scan(f, a, b, guard_points);
  if (!std::isfinite(guard.fs[guard.best])) {
    throw NumericError("minimize_guarded: objective is not finite on the interval");
  }
  ScalarMin m = refine(f, guard, a, b, tol);

  const Scan check = scan(f, a, b, check_points);
  if (check.fs[check.best] < m.fx) {
    const ScalarMin alt = refine(f, check, a, b, tol);
    if (alt.fx < m.fx) m = alt;
  }
  return {m.x, m.fx, guard.minima};
}

}  // namespace bioremed
