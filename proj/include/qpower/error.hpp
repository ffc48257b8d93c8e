#ifndef QPOWER_ERROR_HPP
#define QPOWER_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qpower {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model parameters, constraint values or configuration documents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A constraint function could not be bracketed: the cap is unreachable
/// within the multiplier search range.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class RootNotFound : public Error {
 public:
  using Error::Error;
};

/// lambda = mu = 0 leaves the water level undefined.
class UndefinedWaterLevel : public Error {
 public:
  using Error::Error;
};

/// g0 lies beyond the vertical asymptote of a region boundary.
class AsymptoteExceeded : public Error {
 public:
  using Error::Error;
};

class EmptyRegion : public Error {
 public:
  using Error::Error;
};

/// A relative loss against a zero reference.
class UndefinedPercentage : public Error {
 public:
  using Error::Error;
};

}  // namespace qpower

#endif  // QPOWER_ERROR_HPP
