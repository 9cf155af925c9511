#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <boost/random/beta_distribution.hpp>

#include "chainladder/error.hpp"
#include "chainladder/parallel.hpp"
#include "chainladder/simulate.hpp"

using namespace chainladder;

TEST_CASE("expected counts") {
  const SimConfig cfg = default_config(SimModel::benchmark);
  CHECK(expected_count(cfg, 1, 1) == 10000.0);
  CHECK(expected_count(cfg, 1, 6) == doctest::Approx(3000.0).epsilon(1e-12));
  CHECK(expected_count(cfg, 3, 1) == doctest::Approx(11000.0).epsilon(1e-12));
  CHECK(default_config(SimModel::schiegl).lambda0 == 5.0);
  CHECK(parse_sim_model("kaishev") == SimModel::kaishev);
  CHECK_THROWS_AS(parse_sim_model("mack"), ParseError);
}

TEST_CASE("config validation") {
  SimConfig cfg;
  cfg.eta1 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SimConfig{};
  cfg.contamination = {{6, 6, 2.0}};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.contamination = contamination_setting(2);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("allocation bins") {
  CHECK(allocation_column(10, 0.0) == 1);
  CHECK(allocation_column(10, 0.0999) == 1);
  CHECK(allocation_column(10, 0.1) == 2);
  CHECK(allocation_column(10, 0.95) == 10);
  CHECK(allocation_column(10, 1.0) == 10);
}

TEST_CASE("generators are deterministic") {
  for (auto m : {SimModel::benchmark, SimModel::schiegl, SimModel::kaishev}) {
    const SimConfig cfg = default_config(m);
    std::mt19937_64 a = stream_rng(4, 0), b = stream_rng(4, 0);
    CHECK(generate(cfg, a) == generate(cfg, b));
  }
}

TEST_CASE("benchmark cell means") {
  const SimConfig cfg = default_config(SimModel::benchmark);
  const int draws = 10000;
  double s11 = 0.0, s58 = 0.0;
  std::mt19937_64 rng = stream_rng(21, 0);
  for (int k = 0; k < draws; ++k) {
    const FullSquare sq = gen_benchmark(cfg, rng);
    s11 += sq(1, 1);
    s58 += sq(5, 8);
  }
  const double m58 = expected_count(cfg, 5, 8);
  CHECK(std::abs(s11 / draws - 10000.0) < 3.0 * std::sqrt(10000.0 / draws));
  CHECK(std::abs(s58 / draws - m58) < 3.0 * std::sqrt(m58 / draws));
}

TEST_CASE("Schiegl cell means") {
  const SimConfig cfg = default_config(SimModel::schiegl);
  const int draws = 100000;
  std::mt19937_64 rng = stream_rng(22, 0);
  double sum = 0.0;
  for (int k = 0; k < draws; ++k) sum += gen_schiegl(cfg, rng)(2, 3);
  const double lambda = expected_count(cfg, 2, 3);
  // Compound Poisson: variance lambda E[Z^2] = lambda r (r + 1).
  const double se = std::sqrt(lambda * cfg.r * (cfg.r + 1.0) / draws);
  CHECK(std::abs(sum / draws - lambda * cfg.r) < 3.0 * se);
}

TEST_CASE("Kaishev row totals") {
  const SimConfig cfg = default_config(SimModel::kaishev);
  const int draws = 20000;
  std::mt19937_64 rng = stream_rng(23, 0);
  double sum = 0.0;
  for (int k = 0; k < draws; ++k) {
    const FullSquare sq = gen_kaishev(cfg, rng);
    for (int j = 1; j <= cfg.n; ++j) sum += sq(4, j);
  }
  const double lambda = cfg.lambda0 * (1.0 + 3.0 * cfg.eta2);
  const double se = std::sqrt(lambda * cfg.r * (cfg.r + 1.0) / draws);
  CHECK(std::abs(sum / draws - lambda * cfg.r) < 3.0 * se);
}

TEST_CASE("allocation follows the binned Beta(1, 1.6)") {
  const int n = 10;
  const int claims = 100000;
  std::mt19937_64 rng = stream_rng(24, 0);
  boost::random::beta_distribution<double> beta(1.0, 1.6);
  std::vector<int> counts(n, 0);
  for (int k = 0; k < claims; ++k) ++counts[static_cast<std::size_t>(allocation_column(n, beta(rng)) - 1)];
  double chi2 = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double p = std::pow(1.0 - (j - 1) / 10.0, 1.6) - std::pow(1.0 - j / 10.0, 1.6);
    const double e = p * claims;
    chi2 += (counts[static_cast<std::size_t>(j - 1)] - e) * (counts[static_cast<std::size_t>(j - 1)] - e) / e;
  }
  CHECK(chi2 < 21.666);  // chi-square(9) at 1%
}

TEST_CASE("contamination") {
  std::mt19937_64 rng = stream_rng(1, 0);
  const FullSquare sq = gen_benchmark(default_config(SimModel::benchmark), rng);
  const FullSquare c = contaminate(sq, contamination_setting(1));
  CHECK(c(2, 3) == 5.0 * sq(2, 3));
  CHECK(c(3, 2) == 5.0 * sq(3, 2));
  CHECK(c(3, 3) == sq(3, 3));
  CHECK(contaminate(sq, {}) == sq);
  CHECK(contaminate(c, {{2, 3, 0.2}, {3, 2, 0.2}})(2, 3) == doctest::Approx(sq(2, 3)).epsilon(1e-15));
  CHECK_THROWS_AS(contaminate(sq, {{10, 2, 2.0}}), std::invalid_argument);

  CHECK(contamination_label({}) == "none");
  CHECK(contamination_label(contamination_setting(2)) == "2:3x2.5;4:1x2.5");
  CHECK(parse_contamination("2:3x2.5;4:1x2.5") == contamination_setting(2));
  CHECK(parse_contamination("none").empty());
  CHECK_THROWS_AS(parse_contamination("2,3,5"), ParseError);
}

TEST_CASE("coverage study smoke run") {
  SimConfig cfg = default_config(SimModel::benchmark);
  CoverageOptions opts;
  opts.methods = {Method::tcl, Method::frb};
  opts.datasets = 4;
  opts.replicates = 60;
  opts.levels = {0.5, 0.995};
  opts.seed = 3;
  opts.threads = 1;
  const CoverageTable a = coverage_study(cfg, opts);
  REQUIRE(a.rows.size() == 4);
  for (const auto& r : a.rows) {
    CHECK(r.n_datasets + r.failed_datasets == 4);
    CHECK(r.coverage_pct >= 0.0);
    CHECK(r.coverage_pct <= 100.0);
  }
  opts.threads = 3;
  CHECK(to_csv(coverage_study(cfg, opts)) == to_csv(a));

  std::istringstream csv(to_csv(a));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "model,contamination,method,level,coverage_pct,n_datasets,B");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
  }
  CHECK(rows == 4);
}
