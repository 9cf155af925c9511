#include <doctest.h>

#include <cmath>
#include <vector>

#include "chainladder/error.hpp"
#include "chainladder/residuals.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace chainladder;

TEST_CASE("variant names round-trip") {
  for (auto v : {ResidualVariant::raw, ResidualVariant::england, ResidualVariant::pinheiro, ResidualVariant::cordeiro}) {
    CHECK(parse_residual_variant(to_string(v)) == v);
  }
  CHECK_THROWS_AS(parse_residual_variant("studentized"), ParseError);
}

TEST_CASE("pearson residuals and the resampling pool") {
  // n = 3: cells (1,1) (1,2) (1,3) (2,1) (2,2) (3,1).
  Eigen::VectorXd y(6), mu(6);
  y << 110, 40, 9, 90, 60, 16;
  mu << 100, 50, 9, 100, 50, 16;
  const ResidualSet rs = pearson(y, mu);
  CHECK(rs.values(0) == doctest::Approx(1.0));
  CHECK(rs.values(1) == doctest::Approx(-10.0 / std::sqrt(50.0)));
  CHECK(rs.values(4) == doctest::Approx(10.0 / std::sqrt(50.0)));
  CHECK(rs.pool() == std::vector<Eigen::Index>{0, 1, 3, 4});

  SUBCASE("structural zeros are kept out") {
    Eigen::VectorXd y0 = y, mu0 = mu;
    y0(1) = 0.0;
    mu0(1) = 0.0;
    const ResidualSet z = pearson(y0, mu0);
    CHECK(z.values(1) == 0.0);
    CHECK(z.pool() == std::vector<Eigen::Index>{0, 3, 4});
  }
  SUBCASE("non-positive mean with data is rejected") {
    Eigen::VectorXd mu0 = mu;
    mu0(1) = 0.0;
    CHECK_THROWS_AS(pearson(y, mu0), std::invalid_argument);
  }
  CHECK_THROWS_AS(pearson(Eigen::VectorXd::Ones(5), Eigen::VectorXd::Ones(5)), std::invalid_argument);
}

TEST_CASE("England factor for a 10-year triangle") {
  const Triangle t = fixtures::taylor_ashe();
  const ResidualSet raw = fit_residuals(t, fit_poisson(t), ResidualVariant::raw);
  const ResidualSet eng = fit_residuals(t, fit_poisson(t), ResidualVariant::england);
  CHECK(eng.variant == ResidualVariant::england);
  // sqrt(55 / 36)
  CHECK(eng.values(7) / raw.values(7) == doctest::Approx(1.2360330).epsilon(1e-7));
}

TEST_CASE("Pinheiro scales by 1/sqrt(1 - h) and zeroes excluded cells") {
  Eigen::VectorXd y(6), mu(6), h(6);
  y << 110, 40, 9, 90, 60, 16;
  mu << 100, 50, 9, 100, 50, 16;
  h << 0.75, 0.5, 1.0, 0.2, 0.0, 1.0;
  const ResidualSet p = adjust_pinheiro(pearson(y, mu), h);
  CHECK(p.values(0) == doctest::Approx(2.0));
  CHECK(p.values(3) == doctest::Approx(-1.0 / std::sqrt(0.8)));
  CHECK(p.values(2) == 0.0);
  CHECK(p.values(5) == 0.0);
  h(1) = 1.0;
  CHECK_THROWS_AS(adjust_pinheiro(pearson(y, mu), h), std::invalid_argument);
}

TEST_CASE("Cordeiro variance identity holds on every corpus fit") {
  for (const Triangle& t : fixtures::corpus()) CHECK(oracles::cordeiro_identity_error(t) < 1e-10);
}

TEST_CASE("Cordeiro mean matches the dense expression") {
  for (const Triangle& t : fixtures::corpus()) {
    const oracles::Dense d = oracles::dense_projections(t);
    const Eigen::Index m = d.mu.size();
    const Eigen::VectorXd jz = d.mu.cwiseSqrt().cwiseProduct(d.z.diagonal());
    const Eigen::VectorXd expected = -0.5 * (Eigen::MatrixXd::Identity(m, m) - d.h) * jz;
    const Eigen::VectorXd got = cordeiro_mean(d.h, d.mu);
    CHECK((got - expected).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("Cordeiro residuals on Taylor-Ashe") {
  const Triangle t = fixtures::taylor_ashe();
  const GlmFit fit = fit_poisson(t);
  const Eigen::MatrixXd h = hat_matrix(fit, design_matrix(10));
  const ResidualSet raw = fit_residuals(t, fit, ResidualVariant::raw);
  const ResidualSet c = fit_residuals(t, fit, ResidualVariant::cordeiro);
  const Eigen::VectorXd bias = cordeiro_mean(h, fit.mu);
  for (Eigen::Index k : raw.pool()) {
    CHECK(c.values(k) == doctest::Approx((raw.values(k) - bias(k)) / std::sqrt(1.0 - h(k, k))));
  }
  // The bias is O(1/sqrt(mu)), negligible at this scale.
  CHECK(bias.cwiseAbs().maxCoeff() < 1e-2);
  CHECK(c.values(9) == 0.0);
  CHECK(c.values(54) == 0.0);
}

TEST_CASE("robust residuals reduce to classical ones without clipping") {
  const Triangle t = fixtures::simulated();
  RobustOptions opts;
  opts.c = 1e3;
  const RobustFit rf = fit_robust(t, opts);
  const GlmFit gf = fit_poisson(t);
  for (auto v : {ResidualVariant::raw, ResidualVariant::pinheiro, ResidualVariant::cordeiro}) {
    const ResidualSet a = fit_residuals(t, rf, v);
    const ResidualSet b = fit_residuals(t, gf, v);
    CHECK((a.values - b.values).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("Schedule P structural zeros stay out of every variant") {
  const Triangle t = fixtures::schedule_p();
  const ResidualSet c = fit_residuals(t, fit_poisson(t), ResidualVariant::cordeiro);
  CHECK(c.values.allFinite());
  CHECK(c.excluded[cell_index(10, {1, 9})]);
  CHECK(c.excluded[cell_index(10, {2, 9})]);
  CHECK(c.pool().size() == 55 - 3 - 1);
}
