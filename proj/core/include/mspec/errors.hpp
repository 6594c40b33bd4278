#pragma once

#include <stdexcept>
#include <string>

#include "mspec/types.hpp"

namespace mspec {

/// Coarse failure classes. The numeric values double as CLI exit codes.
enum class ErrorKind {
  validation = 1,
  numerical = 2,
  theory = 3,
  config = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed input structure (unsorted atoms, empty subinterval, ...).
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// A numerical procedure could not reach its tolerance.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : Error(ErrorKind::numerical, what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// B_+(x, lambda) or B_-(x, lambda) too close to singular to continue a solution.
class SingularTransferError : public Error {
 public:
  SingularTransferError(const std::string& what, double x, Complex lambda)
      : Error(ErrorKind::numerical, what), x_(x), lambda_(lambda) {}
  double x() const noexcept { return x_; }
  Complex lambda() const noexcept { return lambda_; }

 private:
  double x_;
  Complex lambda_;
};

/// A structural consequence of the theory failed (rank loss of F, Omega != 0, ...).
class TheoryViolation : public Error {
 public:
  explicit TheoryViolation(const std::string& what) : Error(ErrorKind::theory, what) {}
};

/// Poisson quotient with a vanishing denominator.
class DegeneratePoint : public Error {
 public:
  DegeneratePoint(const std::string& what, double s) : Error(ErrorKind::numerical, what), s_(s) {}
  double s() const noexcept { return s_; }

 private:
  double s_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(ErrorKind::config, field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace mspec
