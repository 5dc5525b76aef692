#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rough {

/// Root of the library's error hierarchy. Every error carries a short
/// machine-readable kind used by the CLI envelope.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error("argument", what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error("precondition", what) {}
};

class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& what) : Error("capability", what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error("numerical", what) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error("divergence", what) {}
};

/// Raised when dyadic refinement does not settle; carries the (mesh, value)
/// trace so callers can inspect how far it got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<std::pair<double, double>> trace)
      : Error("convergence", what), trace_(std::move(trace)) {}
  const std::vector<std::pair<double, double>>& trace() const noexcept { return trace_; }

 private:
  std::vector<std::pair<double, double>> trace_;
};

}  // namespace rough
