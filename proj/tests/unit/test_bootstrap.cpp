#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "chainladder/bootstrap.hpp"
#include "chainladder/error.hpp"
#include "chainladder/parallel.hpp"
#include "fixtures.hpp"

using namespace chainladder;

namespace {

// Exact multiplicative triangle: every Pearson residual is 0.
Triangle noise_free(int n) {
  std::vector<double> v;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n + 1 - i; ++j) v.push_back(1000.0 * (1.0 + 0.1 * i) * std::pow(0.6, j - 1));
  return Triangle(n, std::move(v));
}

ResidualSet pool_of(std::vector<double> values) {
  ResidualSet rs;
  rs.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  rs.excluded.assign(values.size(), false);
  return rs;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (auto m : {Method::tcl, Method::cb, Method::wb, Method::ifb, Method::frb}) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("mack"), ParseError);
}

TEST_CASE("type 7 quantile") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({7.0}, 0.995) == 7.0);
  CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(quantile(v, 1.5), std::invalid_argument);
}

TEST_CASE("winsorizing clamps k values per tail") {
  const ResidualSet rs = pool_of({5, 1, 9, 3, 10, 2, 8, 4, 7, 6});
  const ResidualSet w = winsorize(rs, 0.10);
  CHECK(w.values.minCoeff() == 2.0);
  CHECK(w.values.maxCoeff() == 9.0);
  CHECK(w.values(1) == 2.0);
  CHECK(w.values(4) == 9.0);
  CHECK(w.values(0) == 5.0);
  CHECK(winsorize(rs, 0.05).values == rs.values);
  CHECK(winsorize(rs, 0.20).values.maxCoeff() == 8.0);
  CHECK_THROWS_AS(winsorize(rs, 0.5), std::invalid_argument);

  SUBCASE("excluded cells are not touched and not counted") {
    ResidualSet ex = rs;
    ex.excluded[4] = true;
    // Nine pool cells: k = 0 at 10%, k = 1 at 20%.
    CHECK(winsorize(ex, 0.10).values == ex.values);
    const ResidualSet v = winsorize(ex, 0.20);
    CHECK(v.values(4) == 10.0);
    CHECK(v.values(2) == 8.0);
    CHECK(v.values(1) == 2.0);
  }
}

TEST_CASE("IFB weight") {
  CHECK(ifb_weight(1.0, 2.0, 30.0, 10.0) == 1.0);
  CHECK(ifb_weight(2.0, 2.0, 30.0, 10.0) == 1.0);
  // (x - c)^2 / (gamma d^2) = 0.1 at x - c = 30.
  CHECK(ifb_weight(32.0, 2.0, 30.0, 10.0) == doctest::Approx(std::pow(1.1, -5.5)).epsilon(1e-12));
  CHECK(ifb_weight(1e4, 2.0, 30.0, 10.0) < 1e-10);
}

TEST_CASE("IFB probabilities sum to one over the pool") {
  const Triangle t = fixtures::simulated_contaminated();
  const RobustFit fit = fit_robust(t);
  const ResidualSet rs = fit_residuals(t, fit, ResidualVariant::cordeiro);
  const IfbWeights w = ifb_weights(t, fit, rs.excluded);
  CHECK(w.probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
  std::size_t downweighted = 0;
  for (Eigen::Index k : rs.pool()) {
    CHECK(w.probs(k) > 0.0);
    if (w.resif(k) > w.cutoff) ++downweighted;
  }
  CHECK(downweighted >= 1);
  CHECK(w.probs(cell_index(10, {1, 10})) == 0.0);
  // The most influential cell is the least likely draw.
  Eigen::Index worst = rs.pool().front();
  for (Eigen::Index k : rs.pool())
    if (w.resif(k) > w.resif(worst)) worst = k;
  for (Eigen::Index k : rs.pool()) CHECK(w.probs(k) >= w.probs(worst));
}

TEST_CASE("resampling draws only pool cells") {
  ResidualSet rs = pool_of({1, 2, 3, 4, 5, 6});
  rs.excluded[2] = true;
  std::mt19937_64 rng = stream_rng(3, 0);
  std::set<double> seen;
  for (int k = 0; k < 200; ++k)
    for (double v : resample_residuals(rs, std::nullopt, rng)) seen.insert(v);
  CHECK(seen == std::set<double>{1, 2, 4, 5, 6});

  Eigen::VectorXd probs(6);
  probs << 0.5, 0.0, 0.0, 0.5, 0.0, 0.0;
  seen.clear();
  for (int k = 0; k < 200; ++k)
    for (double v : resample_residuals(rs, probs, rng)) seen.insert(v);
  CHECK(seen == std::set<double>{1, 4});
}

TEST_CASE("pseudo-history") {
  Eigen::VectorXd r(3), mu(3);
  r << 0, 1, -2;
  mu << 4, 9, 16;
  const Eigen::VectorXd y = pseudo_history(r, mu);
  CHECK(y(0) == 4.0);
  CHECK(y(1) == 12.0);
  CHECK(y(2) == 8.0);
}

TEST_CASE("stream generators are reproducible and distinct") {
  CHECK(stream_rng(1, 5)() == stream_rng(1, 5)());
  CHECK(stream_rng(1, 5)() != stream_rng(1, 6)());
  CHECK(stream_rng(1, 5)() != stream_rng(2, 5)());
}

TEST_CASE("chain-ladder completion equals the quasi-Poisson fit") {
  for (int k = 0; k < 20; ++k) {
    const int n = 3 + k % 8;
    const Triangle t = fixtures::random_triangle(n, 500 + static_cast<std::uint64_t>(k));
    std::vector<int> last(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) last[static_cast<std::size_t>(i)] = n - i;
    const Eigen::MatrixXd sq = chain_ladder_completion(triangle_matrix(t.as_vector(), n), last);
    const GlmFit fit = fit_poisson(t);
    for (const Cell c : future_cells(n)) {
      CHECK(sq(c.row - 1, c.col - 1) == doctest::Approx(std::exp(linear_predictor(fit.theta, n, c))).epsilon(1e-9));
    }
    for (const Cell c : observed_cells(n)) CHECK(sq(c.row - 1, c.col - 1) == t.at(c));
  }
}

TEST_CASE("chain-ladder completion of a negative pseudo-history") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
  m << 100, 50, -20,
       120, -70, 0,
       90, 0, 0;
  const Eigen::MatrixXd sq = chain_ladder_completion(m, {3, 2, 1});
  // f2 = 200/220, f3 = 130/150.
  const double f2 = 200.0 / 220.0;
  const double c22 = 50.0;
  CHECK(sq(1, 2) == doctest::Approx(c22 * (130.0 / 150.0) - c22));
  CHECK(sq(2, 1) == doctest::Approx(90.0 * f2 - 90.0));
  CHECK_THROWS_AS(chain_ladder_completion(Eigen::MatrixXd::Zero(3, 3), {3, 2, 1}), FitError);
}

TEST_CASE("zero-residual replicates reproduce the point reserve") {
  const Triangle t = noise_free(6);
  BootstrapOptions opts;
  opts.replicates = 5;
  opts.seed = 11;
  opts.threads = 1;
  opts.method = Method::tcl;
  const double point = fitted_reserve(fit_poisson(t).theta, 6);
  for (double r : run_bootstrap(t, opts).reserves) CHECK(r == doctest::Approx(point).epsilon(1e-9));

  // Robust residuals of exact data are O(1/sqrt(mu)), not 0.
  const double robust = fitted_reserve(fit_robust(t).theta, 6);
  for (auto m : {Method::cb, Method::frb}) {
    opts.method = m;
    for (double r : run_bootstrap(t, opts).reserves) CHECK(r == doctest::Approx(robust).epsilon(1e-3));
  }
}

TEST_CASE("FRB replicate at the fitted means returns theta-hat exactly") {
  const Triangle t = fixtures::simulated();
  const RobustFit fit = fit_robust(t);
  const FrbState st = frb_prepare(t, fit);
  const Eigen::VectorXd theta = st.replicate_theta(fit.mu);
  CHECK(theta == fit.theta);
  CHECK(st.condition < 1e12);
}

TEST_CASE("bootstrap output does not depend on the thread count") {
  const Triangle t = fixtures::taylor_ashe();
  for (auto m : {Method::tcl, Method::ifb, Method::frb}) {
    BootstrapOptions opts;
    opts.method = m;
    opts.replicates = 300;
    opts.seed = 99;
    opts.threads = 1;
    const BootstrapResult a = run_bootstrap(t, opts);
    opts.threads = 3;
    const BootstrapResult b = run_bootstrap(t, opts);
    CHECK(a.reserves == b.reserves);
    CHECK(a.failed == b.failed);
  }
}

TEST_CASE("failed replicates are replaced by later streams") {
  BootstrapOptions opts;
  opts.threads = 2;
  opts.max_failure_rate = 1.0;
  // Streams 1, 3, 5, ... fail.
  auto [vals, failed] = run_replicates<int>(6, opts, [](std::uint64_t b) -> std::optional<int> {
    if (b % 2 == 1) return std::nullopt;
    return static_cast<int>(b);
  });
  CHECK(vals == std::vector<int>{0, 2, 4, 6, 8, 10});
  CHECK(failed == 5);

  opts.max_failure_rate = 0.05;
  auto always = [](std::uint64_t) -> std::optional<int> { return std::nullopt; };
  CHECK_THROWS_AS(run_replicates<int>(100, opts, always), BootstrapError);
}

TEST_CASE("engine keeps the point fit it perturbs") {
  const Triangle t = fixtures::taylor_ashe();
  BootstrapOptions opts;
  opts.method = Method::frb;
  const ReplicateEngine e(t, opts);
  CHECK(e.point_theta() == fit_robust(t).theta);
  CHECK(!e.probs());
  opts.method = Method::ifb;
  CHECK(ReplicateEngine(t, opts).probs().has_value());
  opts.replicates = 0;
  CHECK_THROWS_AS(ReplicateEngine(t, opts), std::invalid_argument);
}
