#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace orbita {

// Base class for every failure this library raises on purpose. The CLI maps
// concrete types to exit codes; messages carry the offending numbers.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A map whose linear part is singular cannot be a germ of an automorphism.
struct NotAnAutomorphismGerm : Error {
  using Error::Error;
};

// Two generators fail to commute beyond tolerance.
struct NotAbelian : Error {
  NotAbelian(std::string msg, int i, int j, double defect_)
      : Error(std::move(msg)), first(i), second(j), defect(defect_) {}
  int first, second;
  double defect;
};

// Eigenvalue clustering cannot split a spectrum unambiguously.
struct IllConditionedSpectrum : Error {
  explicit IllConditionedSpectrum(std::string msg, double gap_ = 0.0)
      : Error(std::move(msg)), gap(gap_) {}
  double gap;
};

// Requested target vector is not in the span of the orbit directions.
struct NotInOrbitSpan : Error {
  NotInOrbitSpan(std::string msg, double residual_)
      : Error(std::move(msg)), residual(residual_) {}
  double residual;
};

// Generators do not share a fixed point within tolerance.
struct NoCommonFixedPoint : Error {
  NoCommonFixedPoint(std::string msg, std::vector<double> residuals_)
      : Error(std::move(msg)), residuals(std::move(residuals_)) {}
  std::vector<double> residuals;
};

// Word/grid enumeration would exceed the desk-scale budget.
struct BudgetExceeded : Error {
  BudgetExceeded(std::string msg, std::size_t requested_)
      : Error(std::move(msg)), requested(requested_) {}
  std::size_t requested;
};

// The sampled group is not dominant at the base point; the orbit map is not
// well defined there.
struct NotDominantAtPoint : Error {
  using Error::Error;
};

// A linearization candidate exists but fails the held-out word residual test.
struct IllDefinedLinearization : Error {
  IllDefinedLinearization(std::string msg, double residual_)
      : Error(std::move(msg)), residual(residual_) {}
  double residual;
};

// An experiment has no admissible candidates; no verdict either way.
struct InconclusiveExperiment : Error {
  using Error::Error;
};

// A region restriction left no points to compare.
struct EmptyRegion : Error {
  using Error::Error;
};

// Scenario file violates the schema.
struct SchemaError : Error {
  using Error::Error;
};

}  // namespace orbita
