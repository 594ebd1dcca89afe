#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ccmkt/harness.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace ccmkt;

namespace {

fs::path fresh_out_dir(const char* leaf) {
  fs::path dir = fs::temp_directory_path() / leaf;
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.sample_sizes = {10, 20};
  c.runs = 2;
  c.oos_count = 200;
  c.solver.rho = 0.1;
  c.solver.tol = 1e-4;
  c.solver.max_iter = 200000;
  return c;
}

}  // namespace

TEST_CASE("default experiment configuration", "[harness]") {
  const ExperimentConfig c;
  const MarketConfig ref = fixtures::two_producer_market();
  REQUIRE(c.market.producers.size() == ref.producers.size());
  for (std::size_t i = 0; i < ref.producers.size(); ++i) {
    CHECK(c.market.producers[i].p_min == ref.producers[i].p_min);
    CHECK(c.market.producers[i].p_max == ref.producers[i].p_max);
    CHECK(c.market.producers[i].r_max == ref.producers[i].r_max);
    CHECK(c.market.producers[i].c1 == ref.producers[i].c1);
    CHECK(c.market.producers[i].c2 == ref.producers[i].c2);
  }
  CHECK(c.market.load == 100.0);
  CHECK(c.market.wind_forecast == 50.0);
  CHECK(c.market.spill_cost == 100.0);
  CHECK(c.market.shed_cost == 300.0);
  CHECK(c.distribution.kind == ErrorDistribution::Kind::Normal);
  CHECK(c.distribution.variance == 50.0);
  CHECK(c.sample_sizes ==
        std::vector<std::size_t>{10, 30, 50, 100, 300, 500, 1000, 1500, 10000});
  CHECK(c.runs == 10);
  CHECK(c.oos_count == 10000);
  CHECK(c.base_seed == 1);
  CHECK(c.mode == Mode::Baseline);
  CHECK(c.solver.rho == 1e-5);
  CHECK(c.solver.tol == 1e-3);
  CHECK(c.solver.max_iter == 20'000'000);
  CHECK(c.solver.initial_prices.energy == 0.0);
  CHECK(c.solver.initial_prices.reserve == 0.0);
  CHECK(c.solver.trace_every == 0);
  CHECK(c.output_dir == "out");
}

TEST_CASE("mode names round-trip", "[harness]") {
  for (Mode m : {Mode::Baseline, Mode::Learning, Mode::Sharing})
    CHECK(parse_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_mode("turbo"), SemanticError);
}

TEST_CASE("configuration validation", "[harness]") {
  SECTION("default config is legal but warns about cheap slack") {
    const ExperimentConfig c;
    const auto warnings = validate_config(c);
    bool spill = false;
    for (const auto& w : warnings) spill = spill || w.find("spill_cost") != std::string::npos;
    CHECK(spill);
  }
  SECTION("size grid must be strictly increasing and non-empty") {
    ExperimentConfig c = desk_config();
    c.sample_sizes = {};
    CHECK_THROWS_AS(validate_config(c), SemanticError);
    c.sample_sizes = {10, 10};
    CHECK_THROWS_AS(validate_config(c), SemanticError);
    c.sample_sizes = {20, 10};
    CHECK_THROWS_AS(validate_config(c), SemanticError);
    c.sample_sizes = {10, 20, 1'000'000'000};
    CHECK_THROWS_AS(validate_config(c), SemanticError);
  }
  SECTION("counts must be positive") {
    ExperimentConfig c = desk_config();
    c.runs = 0;
    CHECK_THROWS_AS(validate_config(c), SemanticError);
    c = desk_config();
    c.oos_count = 0;
    CHECK_THROWS_AS(validate_config(c), SemanticError);
  }
  SECTION("learning needs a parametric family to fit") {
    ExperimentConfig c = desk_config();
    c.mode = Mode::Learning;
    CHECK_THROWS_AS(validate_config(c), SemanticError);
    c.distribution = ErrorDistribution::scaled_beta(5.0, 10.0, 65.0);
    CHECK_NOTHROW(validate_config(c));
  }
  SECTION("market invariants propagate") {
    ExperimentConfig c = desk_config();
    c.market.producers[0].c2 = 0.0;
    CHECK_THROWS_AS(validate_config(c), SemanticError);
  }
}

TEST_CASE("config file loading", "[harness]") {
  const fs::path dir = fresh_out_dir("ccmkt_cfg");
  fs::create_directories(dir);

  SECTION("missing file") {
    CHECK_THROWS_AS(load_config((dir / "absent.json").string()), IoError);
  }
  SECTION("empty object falls back to defaults with warnings") {
    const fs::path p = dir / "empty.json";
    std::ofstream(p) << "{}\n";
    std::vector<std::string> warnings;
    const ExperimentConfig c = load_config(p.string(), &warnings);
    CHECK(c.market.load == 100.0);
    CHECK(c.runs == 10);
    CHECK(warnings.size() == 9);  // one per missing top-level key
  }
  SECTION("partial override keeps the rest at defaults") {
    const fs::path p = dir / "partial.json";
    std::ofstream(p) << R"({
      "sample_sizes": [5, 7],
      "runs": 3,
      "mode": "sharing",
      "solver": {"rho": 0.25, "trace_every": 50}
    })";
    const ExperimentConfig c = load_config(p.string());
    CHECK(c.sample_sizes == std::vector<std::size_t>{5, 7});
    CHECK(c.runs == 3);
    CHECK(c.mode == Mode::Sharing);
    CHECK(c.solver.rho == 0.25);
    CHECK(c.solver.trace_every == 50);
    CHECK(c.solver.tol == 1e-3);
    CHECK(c.market.load == 100.0);
    CHECK(c.oos_count == 10000);
  }
  SECTION("malformed JSON") {
    const fs::path p = dir / "broken.json";
    std::ofstream(p) << "{ not json";
    CHECK_THROWS_AS(load_config(p.string()), ParseError);
  }
  SECTION("wrong field type names the field") {
    const fs::path p = dir / "badtype.json";
    std::ofstream(p) << R"({"runs": "many"})";
    try {
      load_config(p.string());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("runs") != std::string::npos);
    }
  }
  SECTION("non-object root") {
    const fs::path p = dir / "array.json";
    std::ofstream(p) << "[1,2,3]";
    CHECK_THROWS_AS(load_config(p.string()), ParseError);
  }
  SECTION("unknown keys warn instead of failing") {
    const fs::path p = dir / "extra.json";
    std::ofstream(p) << R"({"runs": 2, "frobnicate": 1, "solver": {"gain": 2}})";
    std::vector<std::string> warnings;
    const ExperimentConfig c = load_config(p.string(), &warnings);
    CHECK(c.runs == 2);
    bool top = false, nested = false;
    for (const auto& w : warnings) {
      top = top || w.find("frobnicate") != std::string::npos;
      nested = nested || w.find("gain") != std::string::npos;
    }
    CHECK(top);
    CHECK(nested);
  }
  SECTION("market block replaces the producer list wholesale") {
    const fs::path p = dir / "market.json";
    std::ofstream(p) << R"({
      "market": {
        "producers": [{"p_min": 0, "p_max": 5, "r_max": 2, "c1": 1, "c2": 4}],
        "load": 12, "wind_forecast": 8, "spill_cost": 500, "shed_cost": 900
      }
    })";
    const ExperimentConfig c = load_config(p.string());
    REQUIRE(c.market.producers.size() == 1);
    CHECK(c.market.producers[0].p_max == 5.0);
    CHECK(c.market.producers[0].c2 == 4.0);
    CHECK(c.market.load == 12.0);
    CHECK(c.market.spill_cost == 500.0);
  }
}

TEST_CASE("config save and load round-trip", "[harness]") {
  const fs::path dir = fresh_out_dir("ccmkt_cfg_rt");
  fs::create_directories(dir);
  ExperimentConfig a;
  a.distribution = ErrorDistribution::scaled_beta(5.0, 10.0, 65.0);
  a.sample_sizes = {5, 10, 40};
  a.runs = 4;
  a.oos_count = 123;
  a.base_seed = 77;
  a.mode = Mode::Learning;
  a.solver.rho = 0.125;
  a.solver.tol = 1e-7;
  a.solver.max_iter = 4242;
  a.solver.initial_prices = {3.5, -1.25};
  a.solver.trace_every = 11;
  a.output_dir = "elsewhere";
  a.market.producers[1].c1 = 2.75;

  const fs::path p = dir / "cfg.json";
  save_config(a, p.string());
  std::vector<std::string> warnings;
  const ExperimentConfig b = load_config(p.string(), &warnings);
  CHECK(warnings.empty());

  CHECK(b.distribution.kind == ErrorDistribution::Kind::ScaledBeta);
  CHECK(b.distribution.alpha_shape == 5.0);
  CHECK(b.distribution.beta_shape == 10.0);
  CHECK(b.distribution.scale == 65.0);
  CHECK(b.distribution.centered == true);
  CHECK(b.sample_sizes == a.sample_sizes);
  CHECK(b.runs == a.runs);
  CHECK(b.oos_count == a.oos_count);
  CHECK(b.base_seed == a.base_seed);
  CHECK(b.mode == a.mode);
  CHECK(b.solver.rho == a.solver.rho);
  CHECK(b.solver.tol == a.solver.tol);
  CHECK(b.solver.max_iter == a.solver.max_iter);
  CHECK(b.solver.initial_prices.energy == a.solver.initial_prices.energy);
  CHECK(b.solver.initial_prices.reserve == a.solver.initial_prices.reserve);
  CHECK(b.solver.trace_every == a.solver.trace_every);
  CHECK(b.output_dir == a.output_dir);
  CHECK(b.market.producers[1].c1 == 2.75);
}

TEST_CASE("seed derivation keeps stream families disjoint", "[harness]") {
  // Every (purpose, size, run, producer) tuple across the default grid must
  // land on its own seed; a collision would silently correlate datasets.
  const ExperimentConfig c;
  std::set<std::uint64_t> seeds;
  std::set<std::uint64_t> stream_hashes;
  std::size_t expected = 0;
  auto take = [&](std::uint64_t seed) {
    seeds.insert(seed);
    // hash the first few raw outputs so the check covers the stream, not
    // just the label
    rng::SplitMix64 s(seed);
    std::uint64_t h = 0;
    for (int j = 0; j < 4; ++j) h = rng::mix64(h ^ s.next());
    stream_hashes.insert(h);
    ++expected;
  };
  for (std::size_t size : c.sample_sizes) {
    for (int run = 0; run < c.runs; ++run) {
      for (std::size_t i = 0; i < 2; ++i) {
        take(private_seed(c.base_seed, size, run, i));
        take(augment_seed(c.base_seed, size, run, i));
      }
    }
  }
  for (int run = 0; run < c.runs; ++run) take(oos_seed(c.base_seed, run));
  CHECK(seeds.size() == expected);
  CHECK(stream_hashes.size() == expected);

  // distinct base seeds move every stream
  CHECK(private_seed(1, 10, 0, 0) != private_seed(2, 10, 0, 0));
  CHECK(oos_seed(1, 0) != oos_seed(2, 0));

  // the out-of-sample seed has no size or mode input at all, so mode
  // comparisons at a fixed run index are paired by construction
  CHECK(oos_seed(1, 3) == oos_seed(1, 3));
}

TEST_CASE("cell preparation by mode", "[harness]") {
  ExperimentConfig c = desk_config();

  SECTION("baseline summaries differ across producers") {
    const PreparedCell cell = prepare_cell(c, 10, 0);
    REQUIRE(cell.summaries.size() == 2);
    CHECK(cell.fits.empty());
    CHECK(cell.summaries[0].variance != cell.summaries[1].variance);
  }
  SECTION("sharing gives everyone the pooled summary") {
    c.mode = Mode::Sharing;
    const PreparedCell cell = prepare_cell(c, 10, 0);
    REQUIRE(cell.summaries.size() == 2);
    CHECK(cell.summaries[0].variance == cell.summaries[1].variance);
    CHECK(cell.summaries[0].w_lo == cell.summaries[1].w_lo);
    CHECK(cell.summaries[0].w_hi == cell.summaries[1].w_hi);

    // pooled support contains each private support
    ExperimentConfig base = desk_config();
    const PreparedCell solo = prepare_cell(base, 10, 0);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(cell.summaries[i].w_lo <= solo.summaries[i].w_lo);
      CHECK(cell.summaries[i].w_hi >= solo.summaries[i].w_hi);
    }
  }
  SECTION("learning records the fit and widens the evidence") {
    c.mode = Mode::Learning;
    c.distribution = ErrorDistribution::scaled_beta(5.0, 10.0, 65.0);
    const PreparedCell cell = prepare_cell(c, 10, 0);
    REQUIRE(cell.fits.size() == 2);
    for (const BetaFit& fit : cell.fits) {
      CHECK(fit.alpha_hat > 0.0);
      CHECK(fit.beta_hat > 0.0);
      CHECK(fit.scale == 65.0);
    }
    ExperimentConfig base = c;
    base.mode = Mode::Baseline;
    const PreparedCell solo = prepare_cell(base, 10, 0);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(cell.summaries[i].w_lo <= solo.summaries[i].w_lo);
      CHECK(cell.summaries[i].w_hi >= solo.summaries[i].w_hi);
      CHECK(cell.summaries[i].variance > 0.0);
    }
  }
}

TEST_CASE("single cell execution is deterministic", "[harness]") {
  const ExperimentConfig c = desk_config();
  const ExperimentRow a = run_single(c, 10, 0);
  const ExperimentRow b = run_single(c, 10, 0);
  CHECK(a.converged == b.converged);
  CHECK(a.iterations == b.iterations);
  CHECK(a.prices.energy == b.prices.energy);
  CHECK(a.prices.reserve == b.prices.reserve);
  REQUIRE(a.decisions.size() == b.decisions.size());
  for (std::size_t i = 0; i < a.decisions.size(); ++i) {
    CHECK(a.decisions[i].p == b.decisions[i].p);
    CHECK(a.decisions[i].alpha == b.decisions[i].alpha);
  }
  if (a.converged) {
    CHECK(a.reliability == b.reliability);
    CHECK(a.mean_cost == b.mean_cost);
    CHECK(a.cvar5 == b.cvar5);
    for (std::size_t i = 0; i < a.payoffs.size(); ++i)
      CHECK(a.payoffs[i] == b.payoffs[i]);
  } else {
    CHECK(std::isnan(a.reliability));
    CHECK(std::isnan(a.mean_cost));
  }
}

TEST_CASE("converged cells carry finite statistics", "[harness]") {
  const ExperimentConfig c = desk_config();
  int converged = 0;
  for (int run = 0; run < 6; ++run) {
    const ExperimentRow row = run_single(c, 10, run);
    if (!row.converged) continue;
    ++converged;
    CHECK(row.reliability >= 0.0);
    CHECK(row.reliability <= 1.0);
    CHECK(std::isfinite(row.mean_cost));
    CHECK(std::isfinite(row.cvar5));
    CHECK(row.cvar5 >= row.mean_cost - 1e-9);
    REQUIRE(row.payoffs.size() == 2);
    CHECK(std::isfinite(row.payoffs[0]));
    double alpha_sum = 0.0;
    for (const auto& d : row.decisions) alpha_sum += d.alpha;
    CHECK(std::abs(alpha_sum - 1.0) < 1e-3);
  }
  // narrow estimated supports at this size keep day-ahead feasible almost
  // always, so an empty sample here points at a harness defect
  CHECK(converged >= 3);
}

TEST_CASE("learning rows expose the fitted shapes", "[harness]") {
  ExperimentConfig c = desk_config();
  c.mode = Mode::Learning;
  c.distribution = ErrorDistribution::scaled_beta(5.0, 10.0, 65.0);
  const ExperimentRow row = run_single(c, 10, 0);
  REQUIRE(row.alpha_hat.size() == 2);
  REQUIRE(row.beta_hat.size() == 2);
  CHECK(row.alpha_hat[0] > 0.0);
  CHECK(row.beta_hat[0] > 0.0);
  if (!row.converged) {
    CHECK(std::isnan(row.reliability));
    CHECK(std::isnan(row.payoffs[0]));
  }
}

TEST_CASE("row CSV layout", "[harness]") {
  CHECK(row_csv_header(2, false) ==
        "mode,sample_size,run,producer_count,converged,iterations,"
        "lambda_e,lambda_r,"
        "p_1,alpha_1,var_1,wlo_1,whi_1,payoff_1,"
        "p_2,alpha_2,var_2,wlo_2,whi_2,payoff_2,"
        "reliability,mean_cost,cvar5");
  CHECK(row_csv_header(2, true) ==
        "mode,sample_size,run,producer_count,converged,iterations,"
        "lambda_e,lambda_r,"
        "p_1,alpha_1,var_1,wlo_1,whi_1,ahat_1,bhat_1,payoff_1,"
        "p_2,alpha_2,var_2,wlo_2,whi_2,ahat_2,bhat_2,payoff_2,"
        "reliability,mean_cost,cvar5");

  const ExperimentConfig c = desk_config();
  const ExperimentRow row = run_single(c, 10, 0);
  const auto fields = split_csv(to_csv(row));
  const auto names = split_csv(row_csv_header(2, false));
  REQUIRE(fields.size() == names.size());
  CHECK(fields[0] == "baseline");
  CHECK(fields[1] == "10");
  CHECK(fields[2] == "0");
  CHECK(fields[3] == "2");
  CHECK((fields[4] == "0" || fields[4] == "1"));
  if (row.converged) {
    // reliability is printed with four decimals, lossless for desk-scale
    // scenario counts
    CHECK(fields[fields.size() - 3].size() == 6);
    CHECK(std::stod(fields[fields.size() - 3]) == row.reliability);
  } else {
    CHECK(fields[fields.size() - 3] == "nan");
  }
}

TEST_CASE("aggregation skips rows that never converged", "[harness]") {
  auto make_row = [](bool ok, double rel, double cost, double tail,
                     double var0, double var1) {
    ExperimentRow r;
    r.mode = "baseline";
    r.sample_size = 10;
    r.run_index = 0;
    r.converged = ok;
    r.decisions = {{20.0, 0.5}, {30.0, 0.5}};
    r.summaries = {ForecastSummary{var0, -1.0, 1.0},
                   ForecastSummary{var1, -2.0, 2.0}};
    if (ok) {
      r.reliability = rel;
      r.mean_cost = cost;
      r.cvar5 = tail;
      r.payoffs = {cost / 10.0, cost / 5.0};
    } else {
      r.payoffs = {std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN()};
    }
    return r;
  };
  std::vector<ExperimentRow> rows;
  rows.push_back(make_row(true, 0.5, 10.0, 10.0, 1.0, 3.0));
  rows.push_back(make_row(true, 1.0, 20.0, 30.0, 2.0, 6.0));
  rows.push_back(make_row(false, 0.0, 0.0, 0.0, 4.0, 9.0));

  const auto aggs = aggregate_rows(rows);
  REQUIRE(aggs.size() == 1);
  const AggregateRow& a = aggs[0];
  CHECK(a.rows == 3);
  CHECK(a.converged_rows == 2);
  CHECK(a.reliability[0] == Catch::Approx(0.75));
  CHECK(a.reliability[1] == 0.5);
  CHECK(a.reliability[2] == 1.0);
  CHECK(a.mean_cost[0] == Catch::Approx(15.0));
  CHECK(a.cvar5[2] == 30.0);
  REQUIRE(a.payoffs.size() == 2);
  CHECK(a.payoffs[0][0] == Catch::Approx(1.5));
  CHECK(a.payoffs[1][0] == Catch::Approx(3.0));
  // variance vectors over the two converged rows: (1,2) vs (3,6)
  CHECK(a.dissim_variance == Catch::Approx(std::sqrt(4.0 + 16.0)));
  // width vectors: (2,2) vs (4,4)
  CHECK(a.dissim_width == Catch::Approx(std::sqrt(8.0)));
  CHECK(std::isnan(a.dissim_ahat));

  SECTION("all rows excluded leaves NaN statistics") {
    std::vector<ExperimentRow> dead{make_row(false, 0, 0, 0, 1.0, 2.0)};
    const auto empty_aggs = aggregate_rows(dead);
    REQUIRE(empty_aggs.size() == 1);
    CHECK(empty_aggs[0].converged_rows == 0);
    CHECK(std::isnan(empty_aggs[0].reliability[0]));
    CHECK(std::isnan(empty_aggs[0].dissim_variance));
  }
}

TEST_CASE("experiment writes consistent CSV files", "[harness]") {
  ExperimentConfig c = desk_config();
  c.output_dir = fresh_out_dir("ccmkt_exp").string();
  const ExperimentOutput out = run_experiment(c);

  REQUIRE(out.rows.size() == 4);  // 2 sizes x 2 runs
  int non_converged = 0;
  for (const auto& r : out.rows)
    if (!r.converged) ++non_converged;
  CHECK(out.non_converged == non_converged);

  const auto row_lines = read_lines(out.rows_path);
  REQUIRE(row_lines.size() == 5);
  CHECK(row_lines[0] == row_csv_header(2, false));
  for (std::size_t i = 1; i < row_lines.size(); ++i)
    CHECK(split_csv(row_lines[i]).size() == split_csv(row_lines[0]).size());

  // recompute the aggregate from the emitted rows; %.17g round-trips
  const auto names = split_csv(row_lines[0]);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    FAIL("missing column " + name);
    return std::size_t{0};
  };
  const std::size_t col_size = column("sample_size");
  const std::size_t col_conv = column("converged");
  const std::size_t col_rel = column("reliability");
  const std::size_t col_mean = column("mean_cost");
  double rel_sum = 0.0, mean_sum = 0.0;
  int used = 0;
  for (std::size_t i = 1; i < row_lines.size(); ++i) {
    const auto f = split_csv(row_lines[i]);
    if (f[col_size] != "10" || f[col_conv] != "1") continue;
    rel_sum += std::stod(f[col_rel]);
    mean_sum += std::stod(f[col_mean]);
    ++used;
  }

  const auto agg_lines = read_lines(out.aggregate_path);
  REQUIRE(agg_lines.size() == 3);
  CHECK(agg_lines[0] == aggregate_csv_header(2, false));
  const auto agg_names = split_csv(agg_lines[0]);
  const auto agg10 = split_csv(agg_lines[1]);
  REQUIRE(agg10.size() == agg_names.size());
  auto agg_col = [&](const std::string& name) {
    for (std::size_t i = 0; i < agg_names.size(); ++i)
      if (agg_names[i] == name) return i;
    FAIL("missing column " + name);
    return std::size_t{0};
  };
  CHECK(agg10[agg_col("sample_size")] == "10");
  CHECK(std::stoi(agg10[agg_col("converged_rows")]) == used);
  if (used > 0) {
    CHECK(std::stod(agg10[agg_col("reliability_mean")]) ==
          Catch::Approx(rel_sum / used).margin(1e-12));
    CHECK(std::stod(agg10[agg_col("mean_cost_mean")]) ==
          Catch::Approx(mean_sum / used).margin(1e-9));
  }

  SECTION("a rerun truncates instead of appending") {
    const ExperimentOutput again = run_experiment(c);
    CHECK(read_lines(again.rows_path).size() == 5);
  }
  SECTION("in-memory aggregates match a recomputation") {
    const auto recomputed = aggregate_rows(out.rows);
    REQUIRE(recomputed.size() == out.aggregates.size());
    for (std::size_t i = 0; i < recomputed.size(); ++i) {
      CHECK(recomputed[i].converged_rows == out.aggregates[i].converged_rows);
      if (recomputed[i].converged_rows > 0)
        CHECK(recomputed[i].reliability[0] == out.aggregates[i].reliability[0]);
    }
  }
}

TEST_CASE("tracing emits one file per cell", "[harness]") {
  ExperimentConfig c = desk_config();
  c.sample_sizes = {10};
  c.runs = 1;
  c.solver.trace_every = 10;
  c.output_dir = fresh_out_dir("ccmkt_trace").string();
  run_experiment(c);
  const fs::path trace = fs::path(c.output_dir) / "trace_baseline_10_0.csv";
  REQUIRE(fs::exists(trace));
  const auto lines = read_lines(trace);
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0] == "iter,lambda_e,lambda_r,energy_residual,reserve_residual");
  CHECK(split_csv(lines[1]).size() == 5);
}
