#pragma once

// Market domain types and the per-producer profit subproblem.
//
// The producer sells energy p at lambda_e and reserve (participation)
// alpha at lambda_r, so the minimized negative profit carries
// q = (c1 - lambda_e, -lambda_r).  The reserve term enters with the
// revenue sign; together with the usual price updates this makes the
// price iteration a dual-decomposition scheme whose fixed point matches
// the centralized duals.  Sign conventions are fixed once, here.

#include <cmath>
#include <string>
#include <vector>

#include "ccmkt/common.hpp"
#include "ccmkt/qp.hpp"

namespace ccmkt {

struct ProducerParams {
  double p_min = 0.0;   // MW
  double p_max = 0.0;   // MW
  double r_max = 0.0;   // MW, real-time adjustment limit
  double c1 = 0.0;      // $/MWh
  double c2 = 0.0;      // $/MW^2 h, must stay strictly positive

  void validate() const {
    if (!(p_min >= 0.0) || !(p_max >= p_min))
      throw SemanticError("producer bounds need 0 <= p_min <= p_max");
    if (!(r_max >= 0.0)) throw SemanticError("r_max must be >= 0");
    if (!(c2 > 0.0)) throw SemanticError("c2 must be > 0 (strict convexity)");
    if (!(c1 >= 0.0)) throw SemanticError("c1 must be >= 0");
  }

  double marginal_at_capacity() const { return 2.0 * c2 * p_max + c1; }
};

struct MarketConfig {
  std::vector<ProducerParams> producers;
  double load = 0.0;           // MW
  double wind_forecast = 0.0;  // MW
  double spill_cost = 0.0;     // $/MWh
  double shed_cost = 0.0;      // $/MWh

  void validate() const {
    if (producers.empty()) throw SemanticError("no producers configured");
    for (const auto& p : producers) p.validate();
    if (!(load > 0.0)) throw SemanticError("load must be > 0");
    if (!(wind_forecast >= 0.0))
      throw SemanticError("wind_forecast must be >= 0");
  }

  // Slack costs below the steepest marginal cost are suspicious but legal;
  // the caller decides what to do with the warnings.
  std::vector<std::string> sanity_warnings() const {
    std::vector<std::string> warnings;
    double steepest = 0.0;
    for (const auto& p : producers)
      steepest = std::max(steepest, p.marginal_at_capacity());
    if (spill_cost <= steepest)
      warnings.push_back("spill_cost " + std::to_string(spill_cost) +
                         " is not above the maximum marginal cost " +
                         std::to_string(steepest));
    if (shed_cost <= steepest)
      warnings.push_back("shed_cost " + std::to_string(shed_cost) +
                         " is not above the maximum marginal cost " +
                         std::to_string(steepest));
    return warnings;
  }
};

// A producer's private view of the forecast error distribution.
struct ForecastSummary {
  double variance = 0.0;  // MW^2
  double w_lo = 0.0;      // MW, <= 0
  double w_hi = 0.0;      // MW, >= 0

  void validate() const {
    if (!(variance >= 0.0)) throw SemanticError("variance must be >= 0");
    if (!(w_lo <= 0.0) || !(w_hi >= 0.0))
      throw SemanticError("support must satisfy w_lo <= 0 <= w_hi");
  }
};

struct ProducerDecision {
  double p = 0.0;      // MW
  double alpha = 0.0;  // participation factor, >= 0
};

struct Prices {
  double energy = 0.0;   // $/MWh
  double reserve = 0.0;  // $/MW
};

// Expected operating cost under the affine recourse policy:
// c2 p^2 + c1 p + c2 (alpha sigma)^2.
inline double expected_cost(const ProducerParams& params,
                            const ProducerDecision& decision,
                            const ForecastSummary& summary) {
  return params.c2 * decision.p * decision.p + params.c1 * decision.p +
         params.c2 * decision.alpha * decision.alpha * summary.variance;
}

// Two-variable minimization of negative profit in x = (p, alpha).
// Constraint rows, in order:
//   [0]  p - alpha w_lo <= p_max
//   [1] -p + alpha w_hi <= -p_min
//   [2]  alpha w_hi <= r_max
//   [3] -alpha w_lo <= r_max
//   [4] -alpha <= 0
inline QpProblem build_best_response_qp(const ProducerParams& params,
                                        const ForecastSummary& summary,
                                        const Prices& prices) {
  QpProblem p;
  p.set_dims(2);
  p.Q[0] = 2.0 * params.c2;
  p.Q[3] = 2.0 * params.c2 * summary.variance;
  p.q[0] = params.c1 - prices.energy;
  p.q[1] = -prices.reserve;
  p.add_ineq({1.0, -summary.w_lo}, params.p_max);
  p.add_ineq({-1.0, summary.w_hi}, -params.p_min);
  p.add_ineq({0.0, summary.w_hi}, params.r_max);
  p.add_ineq({0.0, -summary.w_lo}, params.r_max);
  p.add_ineq({0.0, -1.0}, 0.0);
  return p;
}

// Solves the best response.  With zero sample variance the alpha
// curvature vanishes; alpha_regularization stands in for c2 * variance so
// the subproblem stays strictly convex and deterministic.
inline ProducerDecision best_response(
    const ProducerParams& params, const ForecastSummary& summary,
    const Prices& prices,
    double alpha_regularization = tol::alpha_reg_default) {
  QpProblem qp = build_best_response_qp(params, summary, prices);
  if (summary.variance == 0.0) qp.Q[3] = 2.0 * alpha_regularization;
  const QpSolution s = solve_qp(qp, 0.0);
  if (s.status == QpStatus::Infeasible)
    throw InfeasibleError("producer best response infeasible");
  if (s.status == QpStatus::SingularKkt)
    throw InvalidProblem("singular KKT in best response");
  return ProducerDecision{s.x[0], s.x[1]};
}

}  // namespace ccmkt
