#pragma once

// Exact solver for tiny dense convex quadratic programs via exhaustive
// active-set enumeration.  Hard limits: 8 variables, 16 inequality rows,
// 2 equality rows.  Everything runs on stack arrays; no allocation.
//
// Contract notes:
//  - solve_qp(p, reg) minimizes 0.5 x'(Q + reg I)x + q'x.  Diagonal
//    entries that are still exactly zero after the shift receive an
//    internal curvature bump of tol::zero_diag_reg so every KKT candidate
//    stays nonsingular and tie-breaking is deterministic; the reported
//    objective uses Q + reg I only.
//  - Candidates are enumerated by increasing cardinality, then
//    lexicographically; the first KKT-consistent one wins.
//  - Infeasible and SingularKkt are reported through QpSolution::status,
//    not exceptions; malformed input throws.

#include <array>
#include <cmath>
#include <cstdint>

#include "ccmkt/common.hpp"

namespace ccmkt {

inline constexpr int kMaxVars = 8;
inline constexpr int kMaxIneq = 16;
inline constexpr int kMaxEq = 2;

struct QpProblem {
  int n = 0;  // variables
  int m = 0;  // inequality rows, A_ineq x <= b_ineq
  int k = 0;  // equality rows, A_eq x = b_eq
  std::array<double, kMaxVars * kMaxVars> Q{};
  std::array<double, kMaxVars> q{};
  std::array<double, kMaxIneq * kMaxVars> A_ineq{};
  std::array<double, kMaxIneq> b_ineq{};
  std::array<double, kMaxEq * kMaxVars> A_eq{};
  std::array<double, kMaxEq> b_eq{};

  // Rows are stored against the current n; call set_dims first.
  void set_dims(int vars) {
    if (vars < 1 || vars > kMaxVars)
      throw DimensionLimit("variable count " + std::to_string(vars) +
                           " outside [1, " + std::to_string(kMaxVars) + "]");
    n = vars;
    m = 0;
    k = 0;
  }

  void add_ineq(const std::array<double, kMaxVars>& row, double rhs) {
    if (m >= kMaxIneq)
      throw DimensionLimit("more than " + std::to_string(kMaxIneq) +
                           " inequality rows");
    for (int j = 0; j < n; ++j) A_ineq[m * n + j] = row[j];
    b_ineq[m] = rhs;
    ++m;
  }

  void add_eq(const std::array<double, kMaxVars>& row, double rhs) {
    if (k >= kMaxEq)
      throw DimensionLimit("more than " + std::to_string(kMaxEq) +
                           " equality rows");
    for (int j = 0; j < n; ++j) A_eq[k * n + j] = row[j];
    b_eq[k] = rhs;
    ++k;
  }
};

enum class QpStatus { Optimal, Infeasible, SingularKkt };

struct QpSolution {
  std::array<double, kMaxVars> x{};
  std::array<double, kMaxIneq> duals_ineq{};
  std::array<double, kMaxEq> duals_eq{};
  double objective = 0.0;
  std::uint32_t active_mask = 0;
  QpStatus status = QpStatus::Infeasible;

  bool is_active(int row) const { return (active_mask >> row) & 1u; }
};

namespace detail {

// In-place LU with partial pivoting; solution lands in rhs.
// Returns false when a pivot falls below the relative threshold.
inline bool lu_solve(int size, double* a, double* rhs, double scale) {
  const double cutoff = tol::pivot * (scale > 1.0 ? scale : 1.0);
  for (int col = 0; col < size; ++col) {
    int pivot_row = col;
    double pivot_mag = std::fabs(a[col * size + col]);
    for (int r = col + 1; r < size; ++r) {
      const double mag = std::fabs(a[r * size + col]);
      if (mag > pivot_mag) {
        pivot_mag = mag;
        pivot_row = r;
      }
    }
    if (pivot_mag <= cutoff) return false;
    if (pivot_row != col) {
      for (int j = col; j < size; ++j) {
        const double t = a[col * size + j];
        a[col * size + j] = a[pivot_row * size + j];
        a[pivot_row * size + j] = t;
      }
      const double t = rhs[col];
      rhs[col] = rhs[pivot_row];
      rhs[pivot_row] = t;
    }
    const double inv = 1.0 / a[col * size + col];
    for (int r = col + 1; r < size; ++r) {
      const double f = a[r * size + col] * inv;
      if (f == 0.0) continue;
      a[r * size + col] = 0.0;
      for (int j = col + 1; j < size; ++j) a[r * size + j] -= f * a[col * size + j];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = size - 1; r >= 0; --r) {
    double v = rhs[r];
    for (int j = r + 1; j < size; ++j) v -= a[r * size + j] * rhs[j];
    rhs[r] = v / a[r * size + r];
  }
  return true;
}

inline void validate(const QpProblem& p) {
  if (p.n < 1 || p.n > kMaxVars || p.m > kMaxIneq || p.k > kMaxEq)
    throw DimensionLimit("problem dimensions out of range");

  double scale = 0.0;
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j)
      scale = std::max(scale, std::fabs(p.Q[i * p.n + j]));
  const double sym_tol = 1e-12 * (1.0 + scale);
  for (int i = 0; i < p.n; ++i) {
    if (p.Q[i * p.n + i] < 0.0)
      throw InvalidProblem("negative diagonal in Q");
    for (int j = i + 1; j < p.n; ++j)
      if (std::fabs(p.Q[i * p.n + j] - p.Q[j * p.n + i]) > sym_tol)
        throw InvalidProblem("Q is not symmetric");
  }

  // Pivoted Cholesky; a semidefinite tail must leave a residual block of
  // zeros, anything negative beyond tolerance is indefinite.
  std::array<double, kMaxVars * kMaxVars> c{};
  for (int i = 0; i < p.n * p.n; ++i) c[i] = p.Q[i];
  std::array<int, kMaxVars> perm{};
  for (int i = 0; i < p.n; ++i) perm[i] = i;
  const double psd_tol = 1e-10 * (1.0 + scale);
  auto at = [&](int i, int j) -> double& {
    return c[perm[i] * p.n + perm[j]];
  };
  for (int step = 0; step < p.n; ++step) {
    int best = step;
    for (int i = step + 1; i < p.n; ++i)
      if (at(i, i) > at(best, best)) best = i;
    if (best != step) {
      const int t = perm[step];
      perm[step] = perm[best];
      perm[best] = t;
    }
    const double d = at(step, step);
    if (d < -psd_tol) throw InvalidProblem("Q is not positive semidefinite");
    if (d <= psd_tol) {
      for (int i = step; i < p.n; ++i)
        for (int j = step; j < p.n; ++j)
          if (std::fabs(at(i, j)) > psd_tol)
            throw InvalidProblem("Q is not positive semidefinite");
      break;
    }
    for (int i = step + 1; i < p.n; ++i) {
      const double f = at(i, step) / d;
      for (int j = step + 1; j <= i; ++j) {
        const double v = at(i, j) - f * at(step, j);
        at(i, j) = v;
        at(j, i) = v;
      }
    }
  }
}

}  // namespace detail

inline QpSolution solve_qp(const QpProblem& p, double regularization = 0.0) {
  if (regularization < 0.0)
    throw InvalidProblem("regularization must be >= 0");
  detail::validate(p);

  const int n = p.n, m = p.m, k = p.k;

  // Effective curvature: uniform shift, then the zero-diagonal bump.
  std::array<double, kMaxVars * kMaxVars> qeff{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) qeff[i * n + j] = p.Q[i * n + j];
  for (int i = 0; i < n; ++i) {
    qeff[i * n + i] += regularization;
    if (qeff[i * n + i] == 0.0) qeff[i * n + i] = tol::zero_diag_reg;
  }

  double kkt_scale = 1.0;
  for (int i = 0; i < n * n; ++i)
    kkt_scale = std::max(kkt_scale, std::fabs(qeff[i]));
  for (int i = 0; i < m * n; ++i)
    kkt_scale = std::max(kkt_scale, std::fabs(p.A_ineq[i]));
  for (int i = 0; i < k * n; ++i)
    kkt_scale = std::max(kkt_scale, std::fabs(p.A_eq[i]));

  const int max_active = (n - k) < m ? (n - k) : m;
  std::array<int, kMaxVars> idx{};
  std::array<double, 16 * 16> kkt{};
  std::array<double, 16> rhs{};
  bool any_solvable = false;

  for (int card = 0; card <= (max_active < 0 ? -1 : max_active); ++card) {
    for (int i = 0; i < card; ++i) idx[i] = i;
    while (true) {
      const int size = n + k + card;
      for (int i = 0; i < size * size; ++i) kkt[i] = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) kkt[i * size + j] = qeff[i * n + j];
      for (int r = 0; r < k; ++r)
        for (int j = 0; j < n; ++j) {
          kkt[(n + r) * size + j] = p.A_eq[r * n + j];
          kkt[j * size + n + r] = p.A_eq[r * n + j];
        }
      for (int r = 0; r < card; ++r)
        for (int j = 0; j < n; ++j) {
          kkt[(n + k + r) * size + j] = p.A_ineq[idx[r] * n + j];
          kkt[j * size + n + k + r] = p.A_ineq[idx[r] * n + j];
        }
      for (int i = 0; i < n; ++i) rhs[i] = -p.q[i];
      for (int r = 0; r < k; ++r) rhs[n + r] = p.b_eq[r];
      for (int r = 0; r < card; ++r) rhs[n + k + r] = p.b_ineq[idx[r]];

      if (detail::lu_solve(size, kkt.data(), rhs.data(), kkt_scale)) {
        any_solvable = true;
        bool ok = true;
        for (int r = 0; r < card && ok; ++r)
          if (rhs[n + k + r] < tol::dual_accept) ok = false;
        for (int r = 0; r < m && ok; ++r) {
          double ax = 0.0;
          for (int j = 0; j < n; ++j) ax += p.A_ineq[r * n + j] * rhs[j];
          if (ax > p.b_ineq[r] + tol::feasibility) ok = false;
        }
        if (ok) {
          QpSolution s;
          s.status = QpStatus::Optimal;
          for (int j = 0; j < n; ++j) s.x[j] = rhs[j];
          for (int r = 0; r < k; ++r) s.duals_eq[r] = rhs[n + r];
          for (int r = 0; r < card; ++r) {
            const double mu = rhs[n + k + r];
            s.duals_ineq[idx[r]] = mu > 0.0 ? mu : 0.0;
            s.active_mask |= 1u << idx[r];
          }
          double obj = 0.0;
          for (int i = 0; i < n; ++i) {
            obj += p.q[i] * s.x[i] + 0.5 * regularization * s.x[i] * s.x[i];
            for (int j = 0; j < n; ++j)
              obj += 0.5 * s.x[i] * p.Q[i * n + j] * s.x[j];
          }
          s.objective = obj;
          return s;
        }
      }

      int pos = card - 1;
      while (pos >= 0 && idx[pos] == m - card + pos) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int j = pos + 1; j < card; ++j) idx[j] = idx[j - 1] + 1;
    }
    if (card == 0 && max_active == 0) break;
  }

  QpSolution s;
  s.status = any_solvable ? QpStatus::Infeasible : QpStatus::SingularKkt;
  return s;
}

}  // namespace ccmkt
