#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gpfunnel {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed user input: files, config values, CSV rows.
class InputError : public Error {
 public:
  using Error::Error;
};

/// (K + noise^2 I) or g g^T is not numerically positive definite.
class FactorizationFailure : public Error {
 public:
  using Error::Error;
};

/// B_i^2 - y^T (K + noise^2 I)^-1 y + N < 0: B_i cannot be an RKHS norm bound for this data.
class NegativeRadicand : public Error {
 public:
  /// `min_bound` is the smallest B_i that would make the radicand non-negative.
  NegativeRadicand(std::size_t dim, double radicand, double min_bound);
  std::size_t dim() const { return dim_; }
  double radicand() const { return radicand_; }
  double min_bound() const { return min_bound_; }

 private:
  std::size_t dim_;
  double radicand_;
  double min_bound_;
};

/// No attractor in the interior of the goal box satisfies the construction rule.
class InfeasibleGoal : public Error {
 public:
  using Error::Error;
};

/// Both funnel ratios vanish in one dimension.
class DegenerateDim : public Error {
 public:
  explicit DegenerateDim(std::size_t dim);
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
};

/// Modulated error left (-c_i, d_i).
class OutsideFunnel : public Error {
 public:
  OutsideFunnel(std::size_t dim, bool upper, double modulated);
  std::size_t dim() const { return dim_; }
  bool upper() const { return upper_; }
  double modulated() const { return modulated_; }

 private:
  std::size_t dim_;
  bool upper_;
  double modulated_;
};

class SingularInputMap : public FactorizationFailure {
 public:
  using FactorizationFailure::FactorizationFailure;
};

class NumericalBlowup : public Error {
 public:
  using Error::Error;
};

}  // namespace gpfunnel
