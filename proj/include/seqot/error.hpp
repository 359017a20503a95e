#pragma once

#include <stdexcept>
#include <string>

namespace seqot {

// Preconditions on user input (dimension mismatch, negative weights, ...)
// are reported with std::invalid_argument. The types below cover failures
// that depend on the problem instance rather than on the call.

/// A solver could not produce a result: infeasible marginals, instance over
/// a configured size limit, iteration cap reached.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A measure is not absolutely continuous w.r.t. another on the shared
/// representation.
class SupportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// MCMC tuning failed: acceptance outside the usable band after adaptation.
class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural hypothesis of a theorem failed its numerical check.
/// `hypothesis()` names it ("quasi-product 3)", "gibbs 1)", ...).
class HypothesisError : public std::runtime_error {
 public:
  HypothesisError(std::string hypothesis, const std::string& what)
      : std::runtime_error(hypothesis + ": " + what), hypothesis_(std::move(hypothesis)) {}
  const std::string& hypothesis() const noexcept { return hypothesis_; }

 private:
  std::string hypothesis_;
};

}  // namespace seqot
