#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace rf {

// Violated precondition or invariant of a documented contract.
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// Operation not defined for the given variant (e.g. projection onto a
// finitely generated cone, Choi matrix of a non-quantum channel).
class UnsupportedOperation : public std::logic_error {
 public:
  explicit UnsupportedOperation(const std::string& what) : std::logic_error(what) {}
};

// Numerical failure inside an optimization routine.
class SolverFailure : public std::runtime_error {
 public:
  explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

// Non-fatal diagnostics (informational completeness, degenerate cones, ...).
// Default handler writes one line to stderr.
using WarnHandler = std::function<void(const std::string&)>;
void warn(const std::string& message);
WarnHandler setWarnHandler(WarnHandler handler);

}  // namespace rf
