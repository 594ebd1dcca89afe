#pragma once

// Price-adjustment equilibrium search and the centralized reference
// dispatch.  Both clear two markets: energy (sum p + wind = load) and
// reserve participation (sum alpha = 1).

#include <cmath>
#include <limits>
#include <vector>

#include "ccmkt/common.hpp"
#include "ccmkt/market.hpp"
#include "ccmkt/qp.hpp"

namespace ccmkt {

struct TatonnementSettings {
  double rho = 1e-5;  // price step per unit of imbalance
  double tol = 1e-3;  // cap on both residuals at convergence
  long long max_iter = 20'000'000;
  Prices initial_prices{0.0, 0.0};
  long long trace_every = 0;  // 0 disables tracing

  void validate() const {
    if (!(rho > 0.0)) throw SemanticError("rho must be > 0");
    if (!(tol > 0.0)) throw SemanticError("tol must be > 0");
    if (max_iter < 1) throw SemanticError("max_iter must be >= 1");
    if (!std::isfinite(initial_prices.energy) ||
        !std::isfinite(initial_prices.reserve))
      throw SemanticError("initial prices must be finite");
  }
};

struct TraceRow {
  long long iter = 0;
  double lambda_e = 0.0;
  double lambda_r = 0.0;
  double energy_residual = 0.0;
  double reserve_residual = 0.0;
};

struct EquilibriumResult {
  std::vector<ProducerDecision> decisions;
  Prices prices;
  long long iterations = 0;
  double energy_residual = 0.0;   // sum p + wind_forecast - load
  double reserve_residual = 0.0;  // sum alpha - 1
  bool converged = false;
};

// Largest participation factor the producer can feasibly offer given its
// support bounds; infinite for a point support at 0.
inline double max_participation(const ProducerParams& params,
                                const ForecastSummary& summary) {
  double cap = std::numeric_limits<double>::infinity();
  if (summary.w_hi > 0.0) cap = std::min(cap, params.r_max / summary.w_hi);
  if (summary.w_lo < 0.0) cap = std::min(cap, params.r_max / (-summary.w_lo));
  const double width = summary.w_hi - summary.w_lo;
  if (width > 0.0)
    cap = std::min(cap, (params.p_max - params.p_min) / width);
  return cap;
}

inline double total_participation_capacity(
    const MarketConfig& config, const std::vector<ForecastSummary>& summaries) {
  double total = 0.0;
  for (std::size_t i = 0; i < config.producers.size(); ++i) {
    const double cap = max_participation(config.producers[i], summaries[i]);
    if (std::isinf(cap)) return cap;
    total += cap;
  }
  return total;
}

// Simultaneous best responses followed by one update of each price.
// The returned decisions and residuals are the ones evaluated AT the
// returned prices, so at convergence each decision is a best response
// to result.prices exactly.
inline EquilibriumResult tatonnement(
    const MarketConfig& config, const std::vector<ForecastSummary>& summaries,
    const TatonnementSettings& settings,
    std::vector<TraceRow>* trace = nullptr) {
  config.validate();
  settings.validate();
  if (summaries.size() != config.producers.size())
    throw LengthMismatch("one forecast summary per producer required");
  for (const auto& s : summaries) s.validate();

  const std::size_t n = config.producers.size();
  EquilibriumResult out;
  out.decisions.resize(n);
  Prices prices = settings.initial_prices;

  auto respond_all = [&](const Prices& at) {
    double sum_p = 0.0, sum_a = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      try {
        out.decisions[i] = best_response(config.producers[i], summaries[i], at);
      } catch (const InfeasibleError& e) {
        throw ProducerInfeasible(static_cast<int>(i), e.what());
      }
      sum_p += out.decisions[i].p;
      sum_a += out.decisions[i].alpha;
    }
    out.energy_residual = sum_p + config.wind_forecast - config.load;
    out.reserve_residual = sum_a - 1.0;
    out.prices = at;
  };

  // No price can clear the reserve market when the largest feasible
  // participation factors cannot reach 1; report the initial snapshot
  // instead of chasing an unattainable balance.
  if (total_participation_capacity(config, summaries) < 1.0 - 1e-12) {
    respond_all(prices);
    out.iterations = 0;
    out.converged = false;
    if (trace && settings.trace_every > 0)
      trace->push_back({0, prices.energy, prices.reserve, out.energy_residual,
                        out.reserve_residual});
    return out;
  }

  for (long long iter = 1; iter <= settings.max_iter; ++iter) {
    respond_all(prices);
    out.iterations = iter;
    if (trace && settings.trace_every > 0 &&
        (iter == 1 || iter % settings.trace_every == 0))
      trace->push_back({iter, prices.energy, prices.reserve,
                        out.energy_residual, out.reserve_residual});
    if (std::max(std::abs(out.energy_residual),
                 std::abs(out.reserve_residual)) <= settings.tol) {
      out.converged = true;
      return out;
    }
    prices.energy -= settings.rho * out.energy_residual;
    prices.reserve -= settings.rho * out.reserve_residual;
  }
  out.converged = false;
  return out;
}

// One QP over all (p_i, alpha_i) with a shared forecast summary; prices
// are the negated equality duals (the kernel's stationarity convention
// puts the dual on the same side as the gradient).
inline EquilibriumResult centralized_dispatch(
    const MarketConfig& config, const ForecastSummary& shared_summary) {
  config.validate();
  shared_summary.validate();
  const std::size_t g = config.producers.size();
  if (g > 3)
    throw DimensionLimit(
        "centralized dispatch supports at most 3 producers (row budget)");

  QpProblem qp;
  const int nv = static_cast<int>(2 * g);
  qp.set_dims(nv);
  for (std::size_t i = 0; i < g; ++i) {
    const ProducerParams& pp = config.producers[i];
    qp.Q[i * nv + i] = 2.0 * pp.c2;
    const std::size_t ai = g + i;
    qp.Q[ai * nv + ai] = 2.0 * pp.c2 * shared_summary.variance;
    qp.q[i] = pp.c1;
  }
  for (std::size_t i = 0; i < g; ++i) {
    const ProducerParams& pp = config.producers[i];
    std::array<double, kMaxVars> row{};
    row[i] = 1.0;
    row[g + i] = -shared_summary.w_lo;
    qp.add_ineq(row, pp.p_max);
    row = {};
    row[i] = -1.0;
    row[g + i] = shared_summary.w_hi;
    qp.add_ineq(row, -pp.p_min);
    row = {};
    row[g + i] = shared_summary.w_hi;
    qp.add_ineq(row, pp.r_max);
    row = {};
    row[g + i] = -shared_summary.w_lo;
    qp.add_ineq(row, pp.r_max);
    row = {};
    row[g + i] = -1.0;
    qp.add_ineq(row, 0.0);
  }
  std::array<double, kMaxVars> balance{};
  for (std::size_t i = 0; i < g; ++i) balance[i] = 1.0;
  qp.add_eq(balance, config.load - config.wind_forecast);
  std::array<double, kMaxVars> reserve{};
  for (std::size_t i = 0; i < g; ++i) reserve[g + i] = 1.0;
  qp.add_eq(reserve, 1.0);

  const QpSolution s = solve_qp(qp, 0.0);
  if (s.status == QpStatus::Infeasible)
    throw InfeasibleError("no jointly feasible dispatch covers load and reserve");
  if (s.status == QpStatus::SingularKkt)
    throw InvalidProblem("singular KKT in centralized dispatch");

  EquilibriumResult out;
  out.decisions.resize(g);
  double sum_p = 0.0, sum_a = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    out.decisions[i] = ProducerDecision{s.x[i], s.x[g + i]};
    sum_p += s.x[i];
    sum_a += s.x[g + i];
  }
  out.prices = Prices{-s.duals_eq[0], -s.duals_eq[1]};
  out.energy_residual = sum_p + config.wind_forecast - config.load;
  out.reserve_residual = sum_a - 1.0;
  out.iterations = 1;
  out.converged = true;
  return out;
}

}  // namespace ccmkt
