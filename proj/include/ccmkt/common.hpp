#pragma once

// Shared error types and the numerical tolerance constants used across the
// library.  Every tolerance lives here so there is exactly one place to
// audit them.

#include <stdexcept>
#include <string>

namespace ccmkt {

namespace tol {

// Absolute primal feasibility slack accepted on constraint rows.
inline constexpr double feasibility = 1e-9;

// Stationarity residual bound, scaled by (1 + max|q|) of the problem.
inline constexpr double stationarity = 1e-8;

// Complementary slackness bound mu_i * (b - Ax)_i.
inline constexpr double complementarity = 1e-8;

// Inequality multipliers this far below zero are treated as zero.
inline constexpr double dual_accept = -1e-11;

// Relative pivot threshold below which a KKT system counts as singular.
inline constexpr double pivot = 1e-12;

// Curvature added to exactly-zero diagonal entries of Q so the solve
// stays strictly convex (linear slack variables).
inline constexpr double zero_diag_reg = 1e-9;

// Default curvature substitute for the participation factor when the
// sample variance is zero.
inline constexpr double alpha_reg_default = 1e-9;

// Spill or shed above this many MW records a violated scenario.
inline constexpr double violation_mw = 1e-6;

// Power balance residual allowed on a re-dispatch outcome.
inline constexpr double balance_mw = 1e-7;

}  // namespace tol

// Base class so callers can catch every library error in one handler.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Problem dimensions exceed the kernel's hard limits.
struct DimensionLimit : Error {
  explicit DimensionLimit(const std::string& what) : Error(what) {}
};

// Malformed problem data (asymmetric or indefinite Q, bad bounds, ...).
struct InvalidProblem : Error {
  explicit InvalidProblem(const std::string& what) : Error(what) {}
};

// A constrained problem admits no feasible point.
struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& what) : Error(what) {}
};

// A producer subproblem was infeasible during the price iteration.
struct ProducerInfeasible : InfeasibleError {
  ProducerInfeasible(int index, const std::string& what)
      : InfeasibleError(what), producer_index(index) {}
  int producer_index;
};

struct EmptyDataset : Error {
  explicit EmptyDataset(const std::string& what) : Error(what) {}
};

// A rescaled sample fell outside [0, 1]; wrong scale or offset.
struct OutOfSupport : Error {
  explicit OutOfSupport(const std::string& what) : Error(what) {}
};

// Iterative fit failed to reach its gradient tolerance.
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& what) : Error(what) {}
};

struct LengthMismatch : Error {
  explicit LengthMismatch(const std::string& what) : Error(what) {}
};

struct EmptyInput : Error {
  explicit EmptyInput(const std::string& what) : Error(what) {}
};

// Nominal dispatch handed to re-dispatch violates producer bounds.
struct NominalOutOfBounds : Error {
  explicit NominalOutOfBounds(const std::string& what) : Error(what) {}
};

// Configuration file could not be parsed.
struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(what) {}
};

// Configuration parsed but violates a type invariant.
struct SemanticError : Error {
  explicit SemanticError(const std::string& what) : Error(what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace ccmkt
