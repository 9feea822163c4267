// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <stdexcept>
#include <string>

namespace cmcfol {

// All failures thrown by the library derive from Error so the CLI can map
// them onto structured error reports.  `kind()` is a stable machine-readable
// tag; `field()` optionally names the config field that caused the problem.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message, std::string field = {})
      : std::runtime_error(message), kind_(std::move(kind)), field_(std::move(field)) {}
  const std::string& kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string kind_;
  std::string field_;
};

struct ConfigError : Error {
  ConfigError(const std::string& msg, std::string field = {})
      : Error("ConfigError", msg, std::move(field)) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error("DomainError", msg) {}
};

struct SingularMetricError : Error {
  explicit SingularMetricError(const std::string& msg) : Error("SingularMetricError", msg) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error("ShapeError", msg) {}
};

struct DegenerateSurfaceError : Error {
  explicit DegenerateSurfaceError(const std::string& msg)
      : Error("DegenerateSurfaceError", msg) {}
};

struct ContainmentError : Error {
  explicit ContainmentError(const std::string& msg) : Error("ContainmentError", msg) {}
};

struct NewtonDivergenceError : Error {
  explicit NewtonDivergenceError(const std::string& msg)
      : Error("NewtonDivergenceError", msg) {}
};

struct SmallnessViolation : Error {
  explicit SmallnessViolation(const std::string& msg) : Error("SmallnessViolation", msg) {}
};

struct GradientMismatchError : Error {
  explicit GradientMismatchError(const std::string& msg)
      : Error("GradientMismatchError", msg) {}
};

struct NoCriticalPointError : Error {
  explicit NoCriticalPointError(const std::string& msg) : Error("NoCriticalPointError", msg) {}
};

struct FoliationOrderViolation : Error {
  explicit FoliationOrderViolation(const std::string& msg)
      : Error("FoliationOrderViolation", msg) {}
};

struct MassZeroError : Error {
  explicit MassZeroError(const std::string& msg) : Error("MassZeroError", msg) {}
};

struct NotCmcError : Error {
  explicit NotCmcError(const std::string& msg) : Error("NotCmcError", msg) {}
};

struct EigenFailure : Error {
  explicit EigenFailure(const std::string& msg) : Error("EigenFailure", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("IoError", msg) {}
};

}  // namespace cmcfol
