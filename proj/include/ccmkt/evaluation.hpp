#pragma once

// Out-of-sample evaluation: cost-optimal re-dispatch per wind scenario,
// reliability and cost statistics, per-producer payoffs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ccmkt/common.hpp"
#include "ccmkt/equilibrium.hpp"
#include "ccmkt/forecast.hpp"
#include "ccmkt/market.hpp"
#include "ccmkt/qp.hpp"

namespace ccmkt {

struct RedispatchOutcome {
  std::vector<double> adjustments;  // MW per producer
  double spillage = 0.0;            // MW
  double shedding = 0.0;            // MW
  double emergency_cost = 0.0;      // $
  double total_cost = 0.0;          // $
  bool violated = false;
};

struct RunStatistics {
  double reliability = 0.0;
  double mean_cost = 0.0;
  double cvar5 = 0.0;
  std::vector<double> payoffs_mean;          // per producer
  std::vector<std::vector<double>> payoffs;  // [producer][scenario], optional
};

// Minimum-cost recourse for one realized wind deviation w_s.  Variables
// (r_1..r_g, w_spill, l_shed); balance sum r - w_spill + l_shed = -w_s.
// The slack diagonals are zero, so the kernel's default curvature bump
// keeps the problem strictly convex.
inline RedispatchOutcome redispatch(const MarketConfig& config,
                                    const std::vector<double>& nominal,
                                    double w_s) {
  config.validate();
  const std::size_t g = config.producers.size();
  if (nominal.size() != g)
    throw LengthMismatch("one nominal dispatch per producer required");
  if (g > 3)
    throw DimensionLimit("redispatch supports at most 3 producers (row budget)");
  for (std::size_t i = 0; i < g; ++i) {
    const ProducerParams& pp = config.producers[i];
    if (nominal[i] < pp.p_min - 1e-9 || nominal[i] > pp.p_max + 1e-9)
      throw NominalOutOfBounds("nominal dispatch outside producer bounds");
  }
  if (w_s < -config.wind_forecast - 1e-9)
    throw SemanticError("scenario implies negative realized wind");

  QpProblem qp;
  const int nv = static_cast<int>(g) + 2;
  const std::size_t spill_ix = g, shed_ix = g + 1;
  qp.set_dims(nv);
  for (std::size_t i = 0; i < g; ++i) {
    const ProducerParams& pp = config.producers[i];
    qp.Q[i * nv + i] = 2.0 * pp.c2;
    qp.q[i] = 2.0 * pp.c2 * nominal[i] + pp.c1;
  }
  qp.q[spill_ix] = config.spill_cost;
  qp.q[shed_ix] = config.shed_cost;

  std::array<double, kMaxVars> row{};
  row[spill_ix] = -1.0;
  qp.add_ineq(row, 0.0);
  row = {};
  row[shed_ix] = -1.0;
  qp.add_ineq(row, 0.0);
  for (std::size_t i = 0; i < g; ++i) {
    const ProducerParams& pp = config.producers[i];
    row = {};
    row[i] = 1.0;
    qp.add_ineq(row, pp.p_max - nominal[i]);
    row = {};
    row[i] = -1.0;
    qp.add_ineq(row, nominal[i] - pp.p_min);
    row = {};
    row[i] = 1.0;
    qp.add_ineq(row, pp.r_max);
    row = {};
    row[i] = -1.0;
    qp.add_ineq(row, pp.r_max);
  }
  row = {};
  row[spill_ix] = 1.0;
  qp.add_ineq(row, config.wind_forecast + w_s);
  row = {};
  row[shed_ix] = 1.0;
  qp.add_ineq(row, config.load);

  std::array<double, kMaxVars> balance{};
  for (std::size_t i = 0; i < g; ++i) balance[i] = 1.0;
  balance[spill_ix] = -1.0;
  balance[shed_ix] = 1.0;
  qp.add_eq(balance, -w_s);

  const QpSolution s = solve_qp(qp, 0.0);
  if (s.status == QpStatus::Infeasible)
    throw InfeasibleError("re-dispatch infeasible; slacks should bound any imbalance");
  if (s.status == QpStatus::SingularKkt)
    throw InvalidProblem("singular KKT in re-dispatch");

  RedispatchOutcome out;
  out.adjustments.resize(g);
  out.spillage = std::max(0.0, s.x[spill_ix]);
  out.shedding = std::max(0.0, s.x[shed_ix]);
  out.emergency_cost =
      config.spill_cost * out.spillage + config.shed_cost * out.shedding;
  out.total_cost = out.emergency_cost;
  for (std::size_t i = 0; i < g; ++i) {
    out.adjustments[i] = s.x[i];
    const ProducerParams& pp = config.producers[i];
    const double pr = nominal[i] + s.x[i];
    out.total_cost += pp.c2 * pr * pr + pp.c1 * pr;
  }
  out.violated =
      out.spillage > tol::violation_mw || out.shedding > tol::violation_mw;
  return out;
}

// Mean of the ceil(tail * n) largest entries.
inline double cvar(const std::vector<double>& costs, double tail) {
  if (costs.empty()) throw EmptyInput("cvar needs at least one cost");
  if (!(tail > 0.0) || !(tail <= 1.0))
    throw SemanticError("tail must lie in (0, 1]");
  std::vector<double> sorted = costs;
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<double>());
  // guard keeps exact products like 0.05*100 from rounding up to 6
  const double raw = tail * static_cast<double>(costs.size());
  std::size_t k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  k = std::max<std::size_t>(1, std::min(k, costs.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += sorted[i];
  return sum / static_cast<double>(k);
}

// Day-ahead revenue at the equilibrium prices minus realized cost.
inline double payoff_per_scenario(const ProducerParams& params,
                                  const ProducerDecision& decision,
                                  const Prices& prices, double r_is) {
  const double produced = decision.p + r_is;
  return prices.energy * decision.p + prices.reserve * decision.alpha -
         params.c2 * produced * produced - params.c1 * produced;
}

inline RunStatistics evaluate_out_of_sample(const MarketConfig& config,
                                            const EquilibriumResult& result,
                                            const ForecastDataset& scenarios,
                                            bool keep_per_scenario = false) {
  if (!result.converged)
    throw SemanticError("out-of-sample evaluation needs a converged result");
  if (scenarios.samples.empty()) throw EmptyDataset("no scenarios");
  const std::size_t g = config.producers.size();
  if (result.decisions.size() != g)
    throw LengthMismatch("result does not match the producer count");

  std::vector<double> nominal(g);
  for (std::size_t i = 0; i < g; ++i) nominal[i] = result.decisions[i].p;

  const std::size_t n = scenarios.samples.size();
  std::vector<double> costs(n);
  RunStatistics stats;
  stats.payoffs_mean.assign(g, 0.0);
  if (keep_per_scenario)
    stats.payoffs.assign(g, std::vector<double>(n, 0.0));
  std::size_t violations = 0;
  double cost_sum = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    RedispatchOutcome o = redispatch(config, nominal, scenarios.samples[s]);
    costs[s] = o.total_cost;
    cost_sum += o.total_cost;
    if (o.violated) ++violations;
    for (std::size_t i = 0; i < g; ++i) {
      const double pay =
          payoff_per_scenario(config.producers[i], result.decisions[i],
                              result.prices, o.adjustments[i]);
      stats.payoffs_mean[i] += pay;
      if (keep_per_scenario) stats.payoffs[i][s] = pay;
    }
  }
  stats.reliability =
      1.0 - static_cast<double>(violations) / static_cast<double>(n);
  stats.mean_cost = cost_sum / static_cast<double>(n);
  stats.cvar5 = cvar(costs, 0.05);
  for (double& p : stats.payoffs_mean) p /= static_cast<double>(n);
  return stats;
}

}  // namespace ccmkt
