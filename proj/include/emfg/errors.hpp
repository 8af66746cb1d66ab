#pragma once

#include <stdexcept>
#include <string>

#include "emfg/types.hpp"

namespace emfg {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A model evaluator produced a non-finite value or was queried below the
/// admissible density floor.
class ModelEvalError : public Error {
public:
  ModelEvalError(std::string evaluator, Vec x, Vec p, double m);

  std::string evaluator;
  Vec x, p;
  double m;
};

/// Density inversion failed at a point: no sign change after the allowed
/// bracket expansions, or the root fell below the density floor.
class InversionError : public Error {
public:
  enum class Kind { NoBracket, DensityUnderflow };

  InversionError(Kind kind, Vec x, Vec p, double s);

  /// Copy of the error annotated with the grid node it occurred at.
  InversionError at_node(Index node, double t) const;

  Kind kind;
  Vec x, p;
  double s;
  Index node = -1;  // -1 when not tied to a grid node
  double t = 0.0;
};

/// A monotone inverse was asked for a value outside the attainable range.
class RangeError : public Error {
public:
  RangeError(std::string composition, double argument);

  std::string composition;
  double argument;
};

class ContractViolation : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Continuation ran out of step halvings before reaching the target.
class StallError : public Error {
public:
  StallError(std::string what, double theta_stall)
      : Error(std::move(what)), theta_stall(theta_stall) {}

  double theta_stall;
};

}  // namespace emfg
