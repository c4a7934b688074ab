#pragma once

#include <stdexcept>
#include <string>

namespace lsor {

// Root of every failure raised by the library. kind() is a stable tag used in
// reports and by the CLI to pick an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define LSOR_DECLARE_ERROR(Name)                                    \
  class Name : public Error {                                       \
   public:                                                          \
    using Error::Error;                                             \
    const char* kind() const noexcept override { return #Name; }    \
  }

LSOR_DECLARE_ERROR(DomainError);
LSOR_DECLARE_ERROR(NumericalBlowup);
LSOR_DECLARE_ERROR(NoIsolatedRoot);
LSOR_DECLARE_ERROR(SingularJacobian);
LSOR_DECLARE_ERROR(QssResidualViolation);
LSOR_DECLARE_ERROR(NotExponentiallyStable);
LSOR_DECLARE_ERROR(NoSolution);
LSOR_DECLARE_ERROR(InitializationFailure);
LSOR_DECLARE_ERROR(InsufficientData);
LSOR_DECLARE_ERROR(NearZeroError);
LSOR_DECLARE_ERROR(ConfigError);
LSOR_DECLARE_ERROR(IoError);

#undef LSOR_DECLARE_ERROR

class StiffnessOrSingularity : public Error {
 public:
  StiffnessOrSingularity(const std::string& what, double time)
      : Error(what), time_(time) {}
  const char* kind() const noexcept override { return "StiffnessOrSingularity"; }
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace lsor
