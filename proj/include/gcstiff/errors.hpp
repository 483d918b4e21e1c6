#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gcstiff {

/// Error classes, also used as process exit codes by the command-line tool.
enum class ErrorCategory : int {
  Usage = 1,
  Parse = 2,
  InvalidModel = 3,
  SingularGeometry = 4,
  SingularConfiguration = 5,
  Unreachable = 6,
  CompensationFailure = 7,
  Identification = 8,
  Io = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exitCode() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

/// Dimension mismatches, non-unit axes, non-positive compliances and similar.
class InvalidModelError : public Error {
 public:
  explicit InvalidModelError(const std::string& what)
      : Error(ErrorCategory::InvalidModel, what) {}
};

/// Compensator folded to zero spring length.
class SingularGeometryError : public Error {
 public:
  explicit SingularGeometryError(const std::string& what)
      : Error(ErrorCategory::SingularGeometry, what) {}
};

/// Jacobian too ill-conditioned for a meaningful stiffness or deflection.
class SingularConfigurationError : public Error {
 public:
  SingularConfigurationError(const std::string& what, double condition)
      : Error(ErrorCategory::SingularConfiguration, what), condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Fewer than six independent virtual joints, so no 6x6 stiffness exists.
class UnderActuatedError : public Error {
 public:
  explicit UnderActuatedError(const std::string& what)
      : Error(ErrorCategory::SingularConfiguration, what) {}
};

class UnreachableTargetError : public Error {
 public:
  UnreachableTargetError(const std::string& what, double position_residual,
                         double orientation_residual)
      : Error(ErrorCategory::Unreachable, what),
        position_residual_(position_residual),
        orientation_residual_(orientation_residual) {}

  double positionResidual() const noexcept { return position_residual_; }
  double orientationResidual() const noexcept { return orientation_residual_; }

 private:
  double position_residual_;
  double orientation_residual_;
};

class CompensationFailureError : public Error {
 public:
  CompensationFailureError(const std::string& what, double residual)
      : Error(ErrorCategory::CompensationFailure, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Bad compensator assignment (duplicate or out-of-range joint index) and
/// similar inconsistencies between otherwise valid inputs.
class InvalidConfigurationError : public Error {
 public:
  explicit InvalidConfigurationError(const std::string& what)
      : Error(ErrorCategory::InvalidModel, what) {}
};

/// The calibration data do not determine every parameter. Each entry of
/// combinations() is a human-readable near-null-space direction.
class UnidentifiableError : public Error {
 public:
  UnidentifiableError(const std::string& what, std::vector<std::string> combinations)
      : Error(ErrorCategory::Identification, what),
        combinations_(std::move(combinations)) {}

  const std::vector<std::string>& combinations() const noexcept { return combinations_; }

 private:
  std::vector<std::string> combinations_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double residual)
      : Error(ErrorCategory::Identification, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, std::string section)
      : Error(ErrorCategory::Parse, format(what, line, section)),
        line_(line),
        section_(std::move(section)) {}

  int line() const noexcept { return line_; }
  const std::string& section() const noexcept { return section_; }

 private:
  static std::string format(const std::string& what, int line, const std::string& section) {
    std::string out = "line " + std::to_string(line);
    if (!section.empty()) out += " [" + section + "]";
    return out + ": " + what;
  }

  int line_;
  std::string section_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

}  // namespace gcstiff
