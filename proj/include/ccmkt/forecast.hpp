#pragma once

// Forecast-error sample generation, dataset summaries, beta maximum
// likelihood fitting, dataset augmentation and pooling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ccmkt/common.hpp"
#include "ccmkt/market.hpp"
#include "ccmkt/rng.hpp"

namespace ccmkt {

struct ErrorDistribution {
  enum class Kind { Normal, ScaledBeta };

  Kind kind = Kind::Normal;
  double variance = 0.0;     // Normal only, MW^2
  double alpha_shape = 0.0;  // ScaledBeta only
  double beta_shape = 0.0;
  double scale = 0.0;  // MW
  bool centered = true;

  static ErrorDistribution normal(double variance) {
    ErrorDistribution d;
    d.kind = Kind::Normal;
    d.variance = variance;
    return d;
  }

  static ErrorDistribution scaled_beta(double alpha_shape, double beta_shape,
                                       double scale, bool centered = true) {
    ErrorDistribution d;
    d.kind = Kind::ScaledBeta;
    d.alpha_shape = alpha_shape;
    d.beta_shape = beta_shape;
    d.scale = scale;
    d.centered = centered;
    return d;
  }

  void validate() const {
    if (kind == Kind::Normal) {
      if (!(variance > 0.0)) throw SemanticError("variance must be > 0");
    } else {
      if (!(alpha_shape > 0.0) || !(beta_shape > 0.0) || !(scale > 0.0))
        throw SemanticError("beta shapes and scale must be > 0");
    }
  }

  // shift that puts the population mean at 0 when centered
  double offset() const {
    if (kind == Kind::ScaledBeta && centered)
      return scale * alpha_shape / (alpha_shape + beta_shape);
    return 0.0;
  }
};

struct ForecastDataset {
  std::vector<double> samples;  // MW
  std::uint64_t seed_label = 0;
};

struct BetaFit {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double scale = 0.0;   // MW, known a priori
  double offset = 0.0;  // MW, centering shift that was undone
};

inline ForecastDataset draw_samples(const ErrorDistribution& dist,
                                    std::size_t count, std::uint64_t seed) {
  dist.validate();
  if (count < 1) throw SemanticError("sample count must be >= 1");
  ForecastDataset out;
  out.seed_label = seed;
  out.samples.resize(count);
  const double off = dist.offset();
  const double sd =
      dist.kind == ErrorDistribution::Kind::Normal ? std::sqrt(dist.variance)
                                                   : 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    rng::SplitMix64 sub(rng::derive(seed, j));
    if (dist.kind == ErrorDistribution::Kind::Normal) {
      out.samples[j] = sd * rng::normal(sub);
    } else {
      out.samples[j] =
          dist.scale * rng::beta_draw(sub, dist.alpha_shape, dist.beta_shape) -
          off;
    }
  }
  return out;
}

// Support bounds are clamped so that w_lo <= 0 <= w_hi always holds;
// variance uses the 1/n divisor.
inline ForecastSummary summarize(const ForecastDataset& dataset) {
  if (dataset.samples.empty()) throw EmptyDataset("summarize needs samples");
  double lo = 0.0, hi = 0.0, mean = 0.0;
  for (double w : dataset.samples) {
    lo = std::min(lo, w);
    hi = std::max(hi, w);
    mean += w;
  }
  const double n = static_cast<double>(dataset.samples.size());
  mean /= n;
  double ss = 0.0;
  for (double w : dataset.samples) ss += (w - mean) * (w - mean);
  return ForecastSummary{ss / n, lo, hi};
}

namespace detail {

// shift-up recurrence to x >= 6, then the asymptotic series
inline double digamma(double x) {
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return acc + std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
}

inline double trigamma(double x) {
  double acc = 0.0;
  while (x < 6.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return acc +
         inv * (1.0 +
                inv * (0.5 + inv * (1.0 / 6.0 -
                                    inv2 * (1.0 / 30.0 - inv2 / 42.0))));
}

}  // namespace detail

inline std::pair<double, double> beta_method_of_moments(double mean,
                                                        double variance) {
  const double c = mean * (1.0 - mean) / variance - 1.0;
  return {mean * c, (1.0 - mean) * c};
}

// Newton iterations on the digamma stationarity conditions of the beta
// log-likelihood, started from the method-of-moments point.
inline BetaFit fit_beta_mle(const ForecastDataset& dataset, double scale,
                            double offset) {
  if (dataset.samples.empty()) throw EmptyDataset("fit needs samples");
  if (!(scale > 0.0)) throw SemanticError("scale must be > 0");

  std::vector<double> x;
  x.reserve(dataset.samples.size());
  for (double w : dataset.samples) {
    double v = (w + offset) / scale;
    if (v < -1e-12 || v > 1.0 + 1e-12)
      throw OutOfSupport("rescaled sample outside [0, 1]");
    v = std::min(1.0 - 1e-9, std::max(1e-9, v));
    x.push_back(v);
  }

  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0, log_x = 0.0, log_1mx = 0.0;
  for (double v : x) {
    var += (v - mean) * (v - mean);
    log_x += std::log(v);
    log_1mx += std::log1p(-v);
  }
  var /= n;
  log_x /= n;
  log_1mx /= n;
  if (var < 1e-15)
    throw NoConvergence("zero sample variance, no interior optimum");

  auto [a, b] = beta_method_of_moments(mean, var);
  if (!(a > 0.0) || !(b > 0.0)) {
    a = 1.0;
    b = 1.0;
  }

  for (int iter = 0; iter < 200; ++iter) {
    const double g1 = detail::digamma(a) - detail::digamma(a + b) - log_x;
    const double g2 = detail::digamma(b) - detail::digamma(a + b) - log_1mx;
    if (std::max(std::abs(g1), std::abs(g2)) < 1e-10)
      return BetaFit{a, b, scale, offset};
    const double ts = detail::trigamma(a + b);
    const double j11 = detail::trigamma(a) - ts;
    const double j22 = detail::trigamma(b) - ts;
    const double j12 = -ts;
    const double det = j11 * j22 - j12 * j12;
    if (!(std::abs(det) > 1e-300)) throw NoConvergence("singular curvature");
    const double da = (g1 * j22 - g2 * j12) / det;
    const double db = (g2 * j11 - g1 * j12) / det;
    double step = 1.0;
    while (a - step * da <= 0.0 || b - step * db <= 0.0) {
      step *= 0.5;
      if (step < 1e-12) throw NoConvergence("step collapsed at the boundary");
    }
    a -= step * da;
    b -= step * db;
  }
  throw NoConvergence("no stationary point within 200 iterations");
}

// Concatenates the original samples with draws from the fitted
// distribution, re-applying the fit's own centering shift.
inline ForecastDataset learn_and_augment(const ForecastDataset& dataset,
                                         const BetaFit& fit,
                                         std::size_t generated_count,
                                         std::uint64_t seed) {
  if (!(fit.alpha_hat > 0.0) || !(fit.beta_hat > 0.0) || !(fit.scale > 0.0))
    throw SemanticError("invalid beta fit");
  ForecastDataset out = dataset;
  out.samples.reserve(dataset.samples.size() + generated_count);
  for (std::size_t j = 0; j < generated_count; ++j) {
    rng::SplitMix64 sub(rng::derive(seed, j));
    out.samples.push_back(
        fit.scale * rng::beta_draw(sub, fit.alpha_hat, fit.beta_hat) -
        fit.offset);
  }
  return out;
}

inline ForecastDataset pool_datasets(
    const std::vector<ForecastDataset>& datasets) {
  if (datasets.empty()) throw EmptyInput("pool needs at least one dataset");
  ForecastDataset out;
  out.seed_label = datasets.front().seed_label;
  std::size_t total = 0;
  for (const auto& d : datasets) total += d.samples.size();
  out.samples.reserve(total);
  for (const auto& d : datasets)
    out.samples.insert(out.samples.end(), d.samples.begin(), d.samples.end());
  return out;
}

inline double dissimilarity_l2(const std::vector<double>& a,
                               const std::vector<double>& b) {
  if (a.size() != b.size()) throw LengthMismatch("vector lengths differ");
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    ss += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(ss);
}

}  // namespace ccmkt
