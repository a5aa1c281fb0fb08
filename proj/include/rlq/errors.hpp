#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rlq {

/// Malformed configuration, flags, or constants. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside a solver. Maps to CLI exit code 2.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::ptrdiff_t node = -1)
      : std::runtime_error(what), node_(node) {}

  /// Grid node where the failure happened, or -1 when not node-specific.
  std::ptrdiff_t node() const noexcept { return node_; }

 private:
  std::ptrdiff_t node_;
};

/// A non-finite value appeared at an integration stage.
class IntegrationError : public SolverError {
 public:
  IntegrationError(const std::string& what, std::ptrdiff_t node, int stage)
      : SolverError(what, node), stage_(stage) {}

  int stage() const noexcept { return stage_; }

 private:
  int stage_;
};

/// The requested configuration sits on a degenerate equilibrium that the
/// solver refuses to integrate (e.g. zero risk aversion under control-dependent
/// ambiguity, where the worst-case drift divides by the investment).
class DegenerateCase : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace rlq
