#pragma once

// Experiment orchestration: configuration (JSON), seed bookkeeping, the
// size-by-run grid, and CSV emission.

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccmkt/common.hpp"
#include "ccmkt/equilibrium.hpp"
#include "ccmkt/evaluation.hpp"
#include "ccmkt/forecast.hpp"
#include "ccmkt/market.hpp"
#include "ccmkt/rng.hpp"

namespace ccmkt {

enum class Mode { Baseline, Learning, Sharing };

inline std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Baseline: return "baseline";
    case Mode::Learning: return "learning";
    case Mode::Sharing: return "sharing";
  }
  return "baseline";
}

inline Mode parse_mode(const std::string& text) {
  if (text == "baseline") return Mode::Baseline;
  if (text == "learning") return Mode::Learning;
  if (text == "sharing") return Mode::Sharing;
  throw SemanticError("unknown mode '" + text +
                      "' (expected baseline, learning or sharing)");
}

// Two-producer study system used as the built-in default.
inline MarketConfig study_market() {
  MarketConfig m;
  m.producers = {ProducerParams{10.0, 32.0, 10.0, 10.0, 1.0},
                 ProducerParams{10.0, 44.0, 10.0, 3.0, 3.0}};
  m.load = 100.0;
  m.wind_forecast = 50.0;
  m.spill_cost = 100.0;
  m.shed_cost = 300.0;
  return m;
}

inline std::vector<std::size_t> default_size_grid() {
  return {10, 30, 50, 100, 300, 500, 1000, 1500, 10000};
}

struct ExperimentConfig {
  MarketConfig market = study_market();
  ErrorDistribution distribution = ErrorDistribution::normal(50.0);
  std::vector<std::size_t> sample_sizes = default_size_grid();
  int runs = 10;
  std::size_t oos_count = 10000;
  std::uint64_t base_seed = 1;
  Mode mode = Mode::Baseline;
  TatonnementSettings solver;  // solver.trace_every > 0 emits per-cell files
  std::string output_dir = "out";
};

struct ExperimentRow {
  std::string mode;
  std::size_t sample_size = 0;
  int run_index = 0;
  bool converged = false;
  long long iterations = 0;
  Prices prices;
  std::vector<ProducerDecision> decisions;
  std::vector<ForecastSummary> summaries;
  std::vector<double> alpha_hat;  // learning mode only
  std::vector<double> beta_hat;
  double reliability = std::numeric_limits<double>::quiet_NaN();
  double mean_cost = std::numeric_limits<double>::quiet_NaN();
  double cvar5 = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> payoffs;  // mean payoff per producer
};

struct AggregateRow {
  std::string mode;
  std::size_t sample_size = 0;
  int rows = 0;
  int converged_rows = 0;
  // statistics over converged rows only
  std::array<double, 3> reliability{};  // mean, min, max
  std::array<double, 3> mean_cost{};
  std::array<double, 3> cvar5{};
  std::vector<std::array<double, 3>> payoffs;  // per producer
  double dissim_variance = std::numeric_limits<double>::quiet_NaN();
  double dissim_width = std::numeric_limits<double>::quiet_NaN();
  double dissim_ahat = std::numeric_limits<double>::quiet_NaN();
  double dissim_bhat = std::numeric_limits<double>::quiet_NaN();
};

// ---- seeds -----------------------------------------------------------
// Purpose tags keep the three stream families disjoint; every index is
// folded through the mixer so distinct tuples give distinct streams.

inline constexpr std::uint64_t kPrivateTag = 1;
inline constexpr std::uint64_t kOosTag = 2;
inline constexpr std::uint64_t kAugmentTag = 3;

inline std::uint64_t private_seed(std::uint64_t base, std::size_t sample_size,
                                  int run_index, std::size_t producer) {
  return rng::derive(rng::derive(base, kPrivateTag, sample_size),
                     static_cast<std::uint64_t>(run_index), producer);
}

// out-of-sample scenarios are shared across modes and sizes on purpose,
// so mode comparisons are paired
inline std::uint64_t oos_seed(std::uint64_t base, int run_index) {
  return rng::derive(base, kOosTag, static_cast<std::uint64_t>(run_index));
}

inline std::uint64_t augment_seed(std::uint64_t base, std::size_t sample_size,
                                  int run_index, std::size_t producer) {
  return rng::derive(rng::derive(base, kAugmentTag, sample_size),
                     static_cast<std::uint64_t>(run_index), producer);
}

// ---- validation ------------------------------------------------------

inline std::vector<std::string> validate_config(const ExperimentConfig& c) {
  c.market.validate();
  c.distribution.validate();
  c.solver.validate();
  if (c.sample_sizes.empty()) throw SemanticError("sample_sizes is empty");
  for (std::size_t i = 0; i + 1 < c.sample_sizes.size(); ++i)
    if (c.sample_sizes[i] >= c.sample_sizes[i + 1])
      throw SemanticError("sample_sizes must be strictly increasing");
  if (c.sample_sizes.front() < 1)
    throw SemanticError("sample sizes must be >= 1");
  if (c.sample_sizes.back() > 100'000'000)
    throw SemanticError("sample size exceeds the 1e8 resource guard");
  if (c.runs < 1) throw SemanticError("runs must be >= 1");
  if (c.oos_count < 1) throw SemanticError("oos_count must be >= 1");
  if (c.oos_count > 100'000'000)
    throw SemanticError("oos_count exceeds the 1e8 resource guard");
  if (c.mode == Mode::Learning &&
      c.distribution.kind != ErrorDistribution::Kind::ScaledBeta)
    throw SemanticError(
        "learning mode fits a beta model and needs a scaled_beta distribution");
  if (c.solver.trace_every < 0)
    throw SemanticError("trace_every must be >= 0");
  return c.market.sanity_warnings();
}

// ---- configuration file ----------------------------------------------

namespace detail {

using json = nlohmann::json;

template <typename T>
T field_as(const json& j, const std::string& name) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ParseError("field '" + name + "': " + e.what());
  }
}

inline void load_market(const json& j, MarketConfig& market,
                        std::vector<std::string>* warnings) {
  auto note = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  if (!j.is_object()) throw ParseError("field 'market': expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "producers") {
      if (!it.value().is_array())
        throw ParseError("field 'producers': expected an array");
      market.producers.clear();
      for (const auto& pj : it.value()) {
        if (!pj.is_object())
          throw ParseError("field 'producers': entries must be objects");
        ProducerParams p;
        const char* fields[] = {"p_min", "p_max", "r_max", "c1", "c2"};
        double* slots[] = {&p.p_min, &p.p_max, &p.r_max, &p.c1, &p.c2};
        for (int f = 0; f < 5; ++f)
          if (pj.contains(fields[f]))
            *slots[f] = field_as<double>(pj.at(fields[f]), fields[f]);
        for (auto pit = pj.begin(); pit != pj.end(); ++pit) {
          bool known = false;
          for (const char* f : fields) known = known || pit.key() == f;
          if (!known)
            note("unknown producer field '" + pit.key() + "' ignored");
        }
        market.producers.push_back(p);
      }
    } else if (key == "load") {
      market.load = field_as<double>(it.value(), key);
    } else if (key == "wind_forecast") {
      market.wind_forecast = field_as<double>(it.value(), key);
    } else if (key == "spill_cost") {
      market.spill_cost = field_as<double>(it.value(), key);
    } else if (key == "shed_cost") {
      market.shed_cost = field_as<double>(it.value(), key);
    } else {
      note("unknown market field '" + key + "' ignored");
    }
  }
}

inline void load_distribution(const json& j, ErrorDistribution& dist) {
  if (!j.is_object())
    throw ParseError("field 'distribution': expected an object");
  const std::string kind = field_as<std::string>(j.value("kind", json("normal")), "kind");
  if (kind == "normal") {
    dist = ErrorDistribution::normal(
        field_as<double>(j.value("variance", json(50.0)), "variance"));
  } else if (kind == "scaled_beta") {
    dist = ErrorDistribution::scaled_beta(
        field_as<double>(j.value("alpha_shape", json(5.0)), "alpha_shape"),
        field_as<double>(j.value("beta_shape", json(10.0)), "beta_shape"),
        field_as<double>(j.value("scale", json(65.0)), "scale"),
        field_as<bool>(j.value("centered", json(true)), "centered"));
  } else {
    throw ParseError("distribution kind '" + kind +
                     "' (expected normal or scaled_beta)");
  }
}

inline void load_solver(const json& j, TatonnementSettings& s,
                        std::vector<std::string>* warnings) {
  if (!j.is_object()) throw ParseError("field 'solver': expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "rho") {
      s.rho = field_as<double>(it.value(), key);
    } else if (key == "tol") {
      s.tol = field_as<double>(it.value(), key);
    } else if (key == "max_iter") {
      s.max_iter = field_as<long long>(it.value(), key);
    } else if (key == "initial_prices") {
      if (!it.value().is_object())
        throw ParseError("field 'initial_prices': expected an object");
      s.initial_prices.energy =
          field_as<double>(it.value().value("energy", json(0.0)), "energy");
      s.initial_prices.reserve =
          field_as<double>(it.value().value("reserve", json(0.0)), "reserve");
    } else if (key == "trace_every") {
      s.trace_every = field_as<long long>(it.value(), key);
    } else if (warnings) {
      warnings->push_back("unknown solver field '" + key + "' ignored");
    }
  }
}

}  // namespace detail

inline ExperimentConfig load_config(const std::string& path,
                                    std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in.good()) throw IoError("cannot open config file '" + path + "'");
  detail::json j;
  try {
    in >> j;
  } catch (const detail::json::exception& e) {
    throw ParseError(std::string("config parse failure: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config root must be an object");

  ExperimentConfig c;
  auto note = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  const char* known[] = {"market",    "distribution", "sample_sizes",
                         "runs",      "oos_count",    "base_seed",
                         "mode",      "solver",       "output_dir"};
  for (const char* key : known)
    if (!j.contains(key))
      note(std::string("'") + key + "' missing; built-in default used");

  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (key == "market") {
        detail::load_market(it.value(), c.market, warnings);
      } else if (key == "distribution") {
        detail::load_distribution(it.value(), c.distribution);
      } else if (key == "sample_sizes") {
        c.sample_sizes =
            detail::field_as<std::vector<std::size_t>>(it.value(), key);
      } else if (key == "runs") {
        c.runs = detail::field_as<int>(it.value(), key);
      } else if (key == "oos_count") {
        c.oos_count = detail::field_as<std::size_t>(it.value(), key);
      } else if (key == "base_seed") {
        c.base_seed = detail::field_as<std::uint64_t>(it.value(), key);
      } else if (key == "mode") {
        c.mode = parse_mode(detail::field_as<std::string>(it.value(), key));
      } else if (key == "solver") {
        detail::load_solver(it.value(), c.solver, warnings);
      } else if (key == "output_dir") {
        c.output_dir = detail::field_as<std::string>(it.value(), key);
      } else {
        note("unknown key '" + key + "' ignored");
      }
    }
  } catch (const detail::json::exception& e) {
    throw ParseError(std::string("config structure: ") + e.what());
  }
  return c;
}

inline void save_config(const ExperimentConfig& c, const std::string& path) {
  detail::json j;
  detail::json producers = detail::json::array();
  for (const auto& p : c.market.producers)
    producers.push_back({{"p_min", p.p_min},
                         {"p_max", p.p_max},
                         {"r_max", p.r_max},
                         {"c1", p.c1},
                         {"c2", p.c2}});
  j["market"] = {{"producers", producers},
                 {"load", c.market.load},
                 {"wind_forecast", c.market.wind_forecast},
                 {"spill_cost", c.market.spill_cost},
                 {"shed_cost", c.market.shed_cost}};
  if (c.distribution.kind == ErrorDistribution::Kind::Normal) {
    j["distribution"] = {{"kind", "normal"},
                         {"variance", c.distribution.variance}};
  } else {
    j["distribution"] = {{"kind", "scaled_beta"},
                         {"alpha_shape", c.distribution.alpha_shape},
                         {"beta_shape", c.distribution.beta_shape},
                         {"scale", c.distribution.scale},
                         {"centered", c.distribution.centered}};
  }
  j["sample_sizes"] = c.sample_sizes;
  j["runs"] = c.runs;
  j["oos_count"] = c.oos_count;
  j["base_seed"] = c.base_seed;
  j["mode"] = to_string(c.mode);
  j["solver"] = {{"rho", c.solver.rho},
                 {"tol", c.solver.tol},
                 {"max_iter", c.solver.max_iter},
                 {"initial_prices",
                  {{"energy", c.solver.initial_prices.energy},
                   {"reserve", c.solver.initial_prices.reserve}}},
                 {"trace_every", c.solver.trace_every}};
  j["output_dir"] = c.output_dir;

  std::ofstream out(path);
  if (!out.good()) throw IoError("cannot write config file '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out.good()) throw IoError("failed writing config file '" + path + "'");
}

// ---- pipeline ---------------------------------------------------------

struct PreparedCell {
  std::vector<ForecastSummary> summaries;
  std::vector<BetaFit> fits;  // learning mode only
};

// Draws the private datasets and turns them into per-producer summaries
// according to the mode.
inline PreparedCell prepare_cell(const ExperimentConfig& config,
                                 std::size_t sample_size, int run_index) {
  const std::size_t g = config.market.producers.size();
  std::vector<ForecastDataset> privates;
  privates.reserve(g);
  for (std::size_t i = 0; i < g; ++i)
    privates.push_back(draw_samples(
        config.distribution, sample_size,
        private_seed(config.base_seed, sample_size, run_index, i)));

  PreparedCell cell;
  cell.summaries.resize(g);
  if (config.mode == Mode::Sharing) {
    const ForecastSummary pooled = summarize(pool_datasets(privates));
    for (std::size_t i = 0; i < g; ++i) cell.summaries[i] = pooled;
  } else if (config.mode == Mode::Learning) {
    for (std::size_t i = 0; i < g; ++i) {
      const BetaFit fit =
          fit_beta_mle(privates[i], config.distribution.scale,
                       config.distribution.offset());
      const ForecastDataset grown = learn_and_augment(
          privates[i], fit, config.oos_count,
          augment_seed(config.base_seed, sample_size, run_index, i));
      cell.summaries[i] = summarize(grown);
      cell.fits.push_back(fit);
    }
  } else {
    for (std::size_t i = 0; i < g; ++i)
      cell.summaries[i] = summarize(privates[i]);
  }
  return cell;
}

inline void write_trace_csv(const std::string& path,
                            const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out.good()) throw IoError("cannot write trace file '" + path + "'");
  out << "iter,lambda_e,lambda_r,energy_residual,reserve_residual\n";
  char line[256];
  for (const TraceRow& t : trace) {
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g,%.17g\n", t.iter,
                  t.lambda_e, t.lambda_r, t.energy_residual,
                  t.reserve_residual);
    out << line;
  }
}

inline ExperimentRow run_single(const ExperimentConfig& config,
                                std::size_t sample_size, int run_index) {
  const std::size_t g = config.market.producers.size();
  PreparedCell cell = prepare_cell(config, sample_size, run_index);

  ExperimentRow row;
  row.mode = to_string(config.mode);
  row.sample_size = sample_size;
  row.run_index = run_index;
  row.summaries = cell.summaries;
  for (const BetaFit& fit : cell.fits) {
    row.alpha_hat.push_back(fit.alpha_hat);
    row.beta_hat.push_back(fit.beta_hat);
  }

  const bool tracing = config.solver.trace_every > 0;
  std::vector<TraceRow> trace;
  EquilibriumResult eq = tatonnement(config.market, cell.summaries,
                                     config.solver, tracing ? &trace : nullptr);
  if (tracing) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec)
      throw IoError("cannot create output directory '" + config.output_dir +
                    "': " + ec.message());
    char name[128];
    std::snprintf(name, sizeof name, "trace_%s_%zu_%d.csv", row.mode.c_str(),
                  sample_size, run_index);
    write_trace_csv(config.output_dir + "/" + name, trace);
  }

  row.converged = eq.converged;
  row.iterations = eq.iterations;
  row.prices = eq.prices;
  row.decisions = eq.decisions;
  row.payoffs.assign(g, std::numeric_limits<double>::quiet_NaN());
  if (eq.converged) {
    const ForecastDataset oos =
        draw_samples(config.distribution, config.oos_count,
                     oos_seed(config.base_seed, run_index));
    const RunStatistics stats =
        evaluate_out_of_sample(config.market, eq, oos);
    row.reliability = stats.reliability;
    row.mean_cost = stats.mean_cost;
    row.cvar5 = stats.cvar5;
    row.payoffs = stats.payoffs_mean;
  }
  return row;
}

// ---- CSV emission ------------------------------------------------------

inline std::string row_csv_header(std::size_t producer_count, bool learning) {
  std::string h = "mode,sample_size,run,producer_count,converged,iterations,"
                  "lambda_e,lambda_r,";
  for (std::size_t i = 1; i <= producer_count; ++i) {
    const std::string ix = std::to_string(i);
    h += "p_" + ix + ",alpha_" + ix + ",var_" + ix + ",wlo_" + ix + ",whi_" +
         ix + ",";
    if (learning) h += "ahat_" + ix + ",bhat_" + ix + ",";
    h += "payoff_" + ix + ",";
  }
  h += "reliability,mean_cost,cvar5";
  return h;
}

inline std::string to_csv(const ExperimentRow& row) {
  std::string out = row.mode + "," + std::to_string(row.sample_size) + "," +
                    std::to_string(row.run_index) + "," +
                    std::to_string(row.decisions.size()) + "," +
                    (row.converged ? "1" : "0") + "," +
                    std::to_string(row.iterations) + ",";
  char buf[64];
  auto num = [&](double v, const char* fmt = "%.17g") {
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  out += num(row.prices.energy) + "," + num(row.prices.reserve) + ",";
  const bool learning = !row.alpha_hat.empty();
  for (std::size_t i = 0; i < row.decisions.size(); ++i) {
    out += num(row.decisions[i].p) + "," + num(row.decisions[i].alpha) + "," +
           num(row.summaries[i].variance) + "," + num(row.summaries[i].w_lo) +
           "," + num(row.summaries[i].w_hi) + ",";
    if (learning)
      out += num(row.alpha_hat[i]) + "," + num(row.beta_hat[i]) + ",";
    out += num(row.payoffs[i]) + ",";
  }
  out += num(row.reliability, "%.4f") + "," + num(row.mean_cost) + "," +
         num(row.cvar5);
  return out;
}

// Statistics per sample size over converged rows; the per-run estimate
// vectors feeding the dissimilarity numbers are ordered by run index.
inline std::vector<AggregateRow> aggregate_rows(
    const std::vector<ExperimentRow>& rows) {
  std::vector<AggregateRow> out;
  std::set<std::size_t> sizes;
  for (const auto& r : rows) sizes.insert(r.sample_size);
  for (std::size_t size : sizes) {
    AggregateRow agg;
    agg.sample_size = size;
    std::vector<const ExperimentRow*> used;
    for (const auto& r : rows) {
      if (r.sample_size != size) continue;
      agg.mode = r.mode;
      ++agg.rows;
      if (r.converged) {
        ++agg.converged_rows;
        used.push_back(&r);
      }
    }
    auto stat = [&](auto get) {
      std::array<double, 3> s{0.0,
                              std::numeric_limits<double>::infinity(),
                              -std::numeric_limits<double>::infinity()};
      for (const ExperimentRow* r : used) {
        const double v = get(*r);
        s[0] += v;
        s[1] = std::min(s[1], v);
        s[2] = std::max(s[2], v);
      }
      if (used.empty())
        s = {std::numeric_limits<double>::quiet_NaN(),
             std::numeric_limits<double>::quiet_NaN(),
             std::numeric_limits<double>::quiet_NaN()};
      else
        s[0] /= static_cast<double>(used.size());
      return s;
    };
    agg.reliability = stat([](const ExperimentRow& r) { return r.reliability; });
    agg.mean_cost = stat([](const ExperimentRow& r) { return r.mean_cost; });
    agg.cvar5 = stat([](const ExperimentRow& r) { return r.cvar5; });
    const std::size_t g = used.empty() ? 0 : used.front()->decisions.size();
    for (std::size_t i = 0; i < g; ++i)
      agg.payoffs.push_back(
          stat([i](const ExperimentRow& r) { return r.payoffs[i]; }));

    if (!used.empty() && g >= 2) {
      double dv = 0.0, dw = 0.0, da = 0.0, db = 0.0;
      int pairs = 0;
      const bool learning = !used.front()->alpha_hat.empty();
      for (std::size_t a = 0; a < g; ++a) {
        for (std::size_t b = a + 1; b < g; ++b) {
          std::vector<double> va, vb, wa, wb, aa, ab, ba, bb;
          for (const ExperimentRow* r : used) {
            va.push_back(r->summaries[a].variance);
            vb.push_back(r->summaries[b].variance);
            wa.push_back(r->summaries[a].w_hi - r->summaries[a].w_lo);
            wb.push_back(r->summaries[b].w_hi - r->summaries[b].w_lo);
            if (learning) {
              aa.push_back(r->alpha_hat[a]);
              ab.push_back(r->alpha_hat[b]);
              ba.push_back(r->beta_hat[a]);
              bb.push_back(r->beta_hat[b]);
            }
          }
          dv += dissimilarity_l2(va, vb);
          dw += dissimilarity_l2(wa, wb);
          if (learning) {
            da += dissimilarity_l2(aa, ab);
            db += dissimilarity_l2(ba, bb);
          }
          ++pairs;
        }
      }
      agg.dissim_variance = dv / pairs;
      agg.dissim_width = dw / pairs;
      if (learning) {
        agg.dissim_ahat = da / pairs;
        agg.dissim_bhat = db / pairs;
      }
    }
    out.push_back(agg);
  }
  return out;
}

inline std::string aggregate_csv_header(std::size_t producer_count,
                                        bool learning) {
  std::string h = "mode,sample_size,rows,converged_rows";
  for (const char* stat : {"reliability", "mean_cost", "cvar5"})
    h += std::string(",") + stat + "_mean," + stat + "_min," + stat + "_max";
  for (std::size_t i = 1; i <= producer_count; ++i) {
    const std::string ix = std::to_string(i);
    h += ",payoff_" + ix + "_mean,payoff_" + ix + "_min,payoff_" + ix + "_max";
  }
  h += ",dissim_variance,dissim_width";
  if (learning) h += ",dissim_ahat,dissim_bhat";
  return h;
}

inline std::string to_csv(const AggregateRow& agg, std::size_t producer_count,
                          bool learning) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string out = agg.mode + "," + std::to_string(agg.sample_size) + "," +
                    std::to_string(agg.rows) + "," +
                    std::to_string(agg.converged_rows);
  for (const auto& s : {agg.reliability, agg.mean_cost, agg.cvar5})
    out += "," + num(s[0]) + "," + num(s[1]) + "," + num(s[2]);
  for (std::size_t i = 0; i < producer_count; ++i) {
    if (i < agg.payoffs.size())
      out += "," + num(agg.payoffs[i][0]) + "," + num(agg.payoffs[i][1]) +
             "," + num(agg.payoffs[i][2]);
    else
      out += ",nan,nan,nan";
  }
  out += "," + num(agg.dissim_variance) + "," + num(agg.dissim_width);
  if (learning) out += "," + num(agg.dissim_ahat) + "," + num(agg.dissim_bhat);
  return out;
}

struct ExperimentOutput {
  std::vector<ExperimentRow> rows;
  std::vector<AggregateRow> aggregates;
  int non_converged = 0;
  std::string rows_path;
  std::string aggregate_path;
};

// Runs the full grid; every finished row is appended and flushed before
// the next cell starts, so a crash keeps all completed rows on disk.
inline ExperimentOutput run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec)
    throw IoError("cannot create output directory '" + config.output_dir +
                  "': " + ec.message());

  ExperimentOutput out;
  out.rows_path = config.output_dir + "/rows.csv";
  out.aggregate_path = config.output_dir + "/aggregate.csv";
  const std::size_t g = config.market.producers.size();
  const bool learning = config.mode == Mode::Learning;

  std::ofstream rows_file(out.rows_path, std::ios::trunc);
  if (!rows_file.good())
    throw IoError("cannot write row file '" + out.rows_path + "'");
  rows_file << row_csv_header(g, learning) << "\n";
  rows_file.flush();

  for (std::size_t size : config.sample_sizes) {
    for (int run = 0; run < config.runs; ++run) {
      ExperimentRow row = run_single(config, size, run);
      if (!row.converged) ++out.non_converged;
      rows_file << to_csv(row) << "\n";
      rows_file.flush();
      if (!rows_file.good())
        throw IoError("failed appending to '" + out.rows_path + "'");
      out.rows.push_back(std::move(row));
    }
  }

  out.aggregates = aggregate_rows(out.rows);
  std::ofstream agg_file(out.aggregate_path, std::ios::trunc);
  if (!agg_file.good())
    throw IoError("cannot write aggregate file '" + out.aggregate_path + "'");
  agg_file << aggregate_csv_header(g, learning) << "\n";
  for (const AggregateRow& agg : out.aggregates)
    agg_file << to_csv(agg, g, learning) << "\n";
  if (!agg_file.good())
    throw IoError("failed writing '" + out.aggregate_path + "'");
  return out;
}

}  // namespace ccmkt
