#pragma once

#include <stdexcept>
#include <string>

namespace pathgap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a mathematical function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical quadrature did not reach its tolerance.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// A search interval does not satisfy the search preconditions.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Dimensions of points, vectors or frames do not agree with the model.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A declared curvature pinching was violated by a sampled configuration.
class CertificateError : public Error {
 public:
  using Error::Error;
};

/// A simulation request exceeds the configured work or memory budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Operation requires an evolving-metric model.
class NotEvolvingError : public Error {
 public:
  using Error::Error;
};

/// Two ensembles or configurations cannot be combined.
class IncompatibleConfig : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pathgap
