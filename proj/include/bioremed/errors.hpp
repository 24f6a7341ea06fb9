#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bioremed {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Requested dilution rate exceeds sup(mu): the reactor has no steady state.
class WashoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double last_time,
                   std::vector<double> last_state)
      : std::runtime_error(what),
        last_time_(last_time),
        last_state_(std::move(last_state)) {}

  double last_time() const noexcept { return last_time_; }
  const std::vector<double>& last_state() const noexcept { return last_state_; }

 private:
  double last_time_;
  std::vector<double> last_state_;
};

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query outside the S1 range covered by a built synthesis field.
class ExtendFieldError : public SynthesisError {
 public:
  using SynthesisError::SynthesisError;
};

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bioremed
