#pragma once

#include <functional>
#include <string>
#include <variant>

namespace bioremed {

struct MonodParams {
  double mu_max;  // 1/s
  double K;       // mol/m^3
};

struct LinearParams {
  double mu;  // 1/(s mol/m^3)
};

// User-supplied law. Validated at construction against increasing/concave
// requirements on [0, domain_max].
struct CustomParams {
  std::function<double(double)> mu;
  std::function<double(double)> mu_prime;
  std::function<double(double)> mu_second;
  double domain_max;
  std::string name = "custom";
};

/// Growth-rate function mu(s): increasing, concave, mu(0) = 0.
///
/// Immutable after construction; safe to share between threads.
class GrowthLaw {
 public:
  static GrowthLaw monod(double mu_max, double K);
  static GrowthLaw linear(double mu);
  static GrowthLaw custom(CustomParams params);

  double mu(double s) const;
  double mu_prime(double s) const;
  double mu_second(double s) const;

  /// Unique s with mu(s) = r. Throws WashoutError when r >= sup mu.
  double mu_inverse(double r) const;

  /// sup of mu over its domain (infinity for the linear law).
  double sup() const;
  /// Upper end of the concentration domain (infinity for Monod/linear).
  double domain_max() const;

  bool is_monod() const { return std::holds_alternative<MonodParams>(params_); }
  bool is_linear() const { return std::holds_alternative<LinearParams>(params_); }
  const std::variant<MonodParams, LinearParams, CustomParams>& params() const {
    return params_;
  }

  std::string describe() const;

 private:
  explicit GrowthLaw(std::variant<MonodParams, LinearParams, CustomParams> p)
      : params_(std::move(p)) {}
  void check_domain(double s) const;

  std::variant<MonodParams, LinearParams, CustomParams> params_;
};

/// Q = V_r mu(S_r).
double sr_to_q(const GrowthLaw& law, double sr, double vr);
/// Steady-state reactor concentration for flow Q: mu(S_r) = Q / V_r.
double q_to_sr(const GrowthLaw& law, double q, double vr);

}  // namespace bioremed
