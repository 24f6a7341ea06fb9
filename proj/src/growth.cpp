#include "bioremed/growth.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "bioremed/errors.hpp"
#include "bioremed/scalar.hpp"

namespace bioremed {
namespace {

constexpr int kCustomSamples = 1000;
constexpr double kInverseRelTol = 1e-12;
constexpr int kInverseMaxIter = 200;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate_custom(const CustomParams& p) {
  if (!p.mu || !p.mu_prime || !p.mu_second) {
    throw std::invalid_argument("custom growth law: mu, mu_prime and mu_second are required");
  }
  if (!(p.domain_max > 0.0) || !std::isfinite(p.domain_max)) {
    throw std::invalid_argument("custom growth law: domain_max must be finite and > 0");
  }
  if (std::abs(p.mu(0.0)) > 1e-14) {
    throw std::invalid_argument("custom growth law: mu(0) must be 0");
  }
  double prev = p.mu(0.0);
  for (int i = 1; i <= kCustomSamples; ++i) {
    const double s = p.domain_max * i / kCustomSamples;
    const double m = p.mu(s);
    const double d1 = p.mu_prime(s);
    const double d2 = p.mu_second(s);
    if (!std::isfinite(m) || !std::isfinite(d1) || !std::isfinite(d2)) {
      throw std::invalid_argument("custom growth law: non-finite value on the domain");
    }
    if (!(m > prev) || !(d1 > 0.0)) {
      std::ostringstream os;
      os << "custom growth law is not increasing near s=" << s;
      throw std::invalid_argument(os.str());
    }
    if (d2 > 1e-12 * (1.0 + std::abs(d1))) {
      std::ostringstream os;
      os << "custom growth law is not concave near s=" << s;
      throw std::invalid_argument(os.str());
    }
    prev = m;
  }
}

}  // namespace

GrowthLaw GrowthLaw::monod(double mu_max, double K) {
  if (!(mu_max > 0.0) || !(K > 0.0)) {
    throw std::invalid_argument("Monod law requires mu_max > 0 and K > 0");
  }
  return GrowthLaw(MonodParams{mu_max, K});
}

GrowthLaw GrowthLaw::linear(double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("linear law requires mu > 0");
  return GrowthLaw(LinearParams{mu});
}

GrowthLaw GrowthLaw::custom(CustomParams params) {
  validate_custom(params);
  return GrowthLaw(std::move(params));
}

void GrowthLaw::check_domain(double s) const {
  if (!(s >= 0.0)) throw DomainError("growth law evaluated at negative concentration");
  if (s > domain_max()) throw DomainError("growth law evaluated beyond its declared domain");
}

double GrowthLaw::mu(double s) const {
  check_domain(s);
  return std::visit(overloaded{
                        [s](const MonodParams& m) { return m.mu_max * s / (m.K + s); },
                        [s](const LinearParams& l) { return l.mu * s; },
                        [s](const CustomParams& c) { return c.mu(s); },
                    },
                    params_);
}

double GrowthLaw::mu_prime(double s) const {
  check_domain(s);
  return std::visit(overloaded{
                        [s](const MonodParams& m) {
                          const double d = m.K + s;
                          return m.mu_max * m.K / (d * d);
                        },
                        [](const LinearParams& l) { return l.mu; },
                        [s](const CustomParams& c) { return c.mu_prime(s); },
                    },
                    params_);
}

double GrowthLaw::mu_second(double s) const {
  check_domain(s);
  return std::visit(overloaded{
                        [s](const MonodParams& m) {
                          const double d = m.K + s;
                          return -2.0 * m.mu_max * m.K / (d * d * d);
                        },
                        [](const LinearParams&) { return 0.0; },
                        [s](const CustomParams& c) { return c.mu_second(s); },
                    },
                    params_);
}

double GrowthLaw::sup() const {
  return std::visit(overloaded{
                        [](const MonodParams& m) { return m.mu_max; },
                        [](const LinearParams&) {
                          return std::numeric_limits<double>::infinity();
                        },
                        [](const CustomParams& c) { return c.mu(c.domain_max); },
                    },
                    params_);
}

double GrowthLaw::domain_max() const {
  if (const auto* c = std::get_if<CustomParams>(&params_)) return c->domain_max;
  return std::numeric_limits<double>::infinity();
}

double GrowthLaw::mu_inverse(double r) const {
  if (!(r >= 0.0)) throw DomainError("mu_inverse: negative rate");
  if (r == 0.0) return 0.0;
  return std::visit(
      overloaded{
          [r](const MonodParams& m) {
            if (r >= m.mu_max) throw WashoutError("no steady state: rate >= mu_max");
            return m.K * r / (m.mu_max - r);
          },
          [r](const LinearParams& l) { return r / l.mu; },
          [r](const CustomParams& c) {
            const double top = c.mu(c.domain_max);
            if (r > top) throw WashoutError("no steady state: rate above sup mu on the domain");
            if (r == top) return c.domain_max;
            return bisect_root([&](double s) { return c.mu(s) - r; }, 0.0, c.domain_max,
                               kInverseRelTol, kInverseMaxIter, /*relative=*/true);
          },
      },
      params_);
}

std::string GrowthLaw::describe() const {
  std::ostringstream os;
  os.precision(12);
  std::visit(overloaded{
                 [&](const MonodParams& m) {
                   os << "monod(mu_max=" << m.mu_max << ", K=" << m.K << ")";
                 },
                 [&](const LinearParams& l) { os << "linear(mu=" << l.mu << ")"; },
                 [&](const CustomParams& c) { os << c.name; },
             },
             params_);
  return os.str();
}

double sr_to_q(const GrowthLaw& law, double sr, double vr) {
  if (!(vr > 0.0)) throw DomainError("reactor volume must be positive");
  return vr * law.mu(sr);
}

double q_to_sr(const GrowthLaw& law, double q, double vr) {
  if (!(vr > 0.0)) throw DomainError("reactor volume must be positive");
  if (!(q >= 0.0)) throw DomainError("flow rate must be non-negative");
  return law.mu_inverse(q / vr);
}

}  // namespace bioremed
