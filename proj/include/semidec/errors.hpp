#pragma once

#include <stdexcept>
#include <string>

namespace semidec {

// Base class for everything this library throws.  The three mid-level
// categories map onto the CLI exit codes: configuration problems exit 2,
// numerical failures exit 3, and theory-domain violations exit 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ---- configuration errors (exit 2) ----------------------------------------

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A topology kind cannot be realized on a component of the requested size
// (ring smaller than 3, prime grid larger than 3, regular-graph parity or
// degree violation).
class InvalidComponentSize : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Sample size outside 1..n.
class InvalidK : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Anything else wrong with requested parameters (bad key, bad value,
// infeasible objective spec, ...).
class InvalidConfig : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Matrix/vector shapes do not agree.
class DimensionMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// ---- numerical errors (exit 3) --------------------------------------------

class NumericalError : public Error {
 public:
  using Error::Error;
};

// A simulation state picked up a NaN/Inf entry (typically a divergent
// stepsize).  Records the first offending round.
class NonFiniteState : public NumericalError {
 public:
  NonFiniteState(const std::string& what, long long round)
      : NumericalError(what), round_(round) {}
  long long round() const { return round_; }

 private:
  long long round_;
};

// A reference solve failed to reach its tolerance within its iteration cap.
class NotConverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// ---- theory-domain errors (exit 4) ----------------------------------------

class TheoryDomainError : public Error {
 public:
  using Error::Error;
};

// The sampled-to-sampled bound is requested at K = 1, where its
// (n-1)/(K-1) factors diverge.
class DivergentAtK1 : public TheoryDomainError {
 public:
  using TheoryDomainError::TheoryDomainError;
};

// Recursion parameters outside the closed forms' domain (C >= 1 or a2 = 1).
class InvalidParams : public TheoryDomainError {
 public:
  using TheoryDomainError::TheoryDomainError;
};

// Stepsize outside (0, p/(8L)].
class StepsizeTooLarge : public TheoryDomainError {
 public:
  using TheoryDomainError::TheoryDomainError;
};

// No finite round count reaches the target accuracy.
class UnreachableEpsilon : public TheoryDomainError {
 public:
  using TheoryDomainError::TheoryDomainError;
};

}  // namespace semidec
