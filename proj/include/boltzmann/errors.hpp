#pragma once

#include <stdexcept>
#include <string>

namespace boltzmann {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration (bad parameter combinations, grid/order mismatch).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Invalid argument to an operation (orders, dimensions, ranges).
class ArgumentError : public Error {
public:
  explicit ArgumentError(const std::string& what) : Error(what) {}
};

/// A state with non-positive density or temperature.
class NonPhysicalStateError : public Error {
public:
  explicit NonPhysicalStateError(const std::string& what) : Error(what) {}
};

/// Maxwellian not representable on the periodic box without significant
/// periodization artifacts.
class SupportViolationError : public Error {
public:
  SupportViolationError(const std::string& what, double boundary_mass)
      : Error(what), boundary_mass(boundary_mass) {}
  double boundary_mass;
};

/// Kernel cache does not match the expected configuration.
class CacheInvalidError : public Error {
public:
  explicit CacheInvalidError(const std::string& what) : Error(what) {}
};

/// Malformed or corrupted file.
class FormatError : public Error {
public:
  explicit FormatError(const std::string& what) : Error(what) {}
};

/// Non-finite values out of a collision evaluation.
class OverflowError : public Error {
public:
  explicit OverflowError(const std::string& what) : Error(what) {}
};

/// Non-finite values produced during time integration.
class BlowUpError : public Error {
public:
  BlowUpError(const std::string& what, double time) : Error(what), time(time) {}
  double time;
};

/// Kernel quadrature failed the refinement check.
class RefinementError : public Error {
public:
  RefinementError(const std::string& what, double discrepancy)
      : Error(what), discrepancy(discrepancy) {}
  double discrepancy;
};

}  // namespace boltzmann
