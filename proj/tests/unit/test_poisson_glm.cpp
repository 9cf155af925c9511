#include <doctest.h>

#include <cmath>
#include <vector>

#include "chainladder/error.hpp"
#include "chainladder/poisson_glm.hpp"
#include "fixtures.hpp"

using namespace chainladder;

namespace {

// Deterministic chain-ladder reserve from cumulative column sums.
double chain_ladder_reserve(const Triangle& t) {
  const int n = t.n();
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n - i; ++j) {
      acc += t(i + 1, j + 1);
      c[i][j] = acc;
    }
  }
  double reserve = 0.0;
  for (int j = 1; j < n; ++j) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n - j; ++i) {
      num += c[i][j];
      den += c[i][j - 1];
    }
    const double f = num / den;
    for (int i = n - j; i < n; ++i) c[i][j] = c[i][j - 1] * f;
  }
  for (int i = 1; i < n; ++i) reserve += c[i][n - 1] - c[i][n - i - 1];
  return reserve;
}

}  // namespace

TEST_CASE("Taylor-Ashe classical reserve") {
  const Triangle t = fixtures::taylor_ashe();
  const GlmFit fit = fit_poisson(t);
  CHECK(fit.converged);
  CHECK(std::round(fitted_reserve(fit.theta, 10)) == 18680856.0);
  CHECK(true_reserve(complete_square(t, dev_factors(t))) == doctest::Approx(fitted_reserve(fit.theta, 10)).epsilon(1e-10));
  CHECK(dev_factors(t)[2] == doctest::Approx(3.4906065).epsilon(1e-7));
}

TEST_CASE("GLM reserve equals chain-ladder on random triangles") {
  for (int k = 0; k < 100; ++k) {
    const int n = 4 + k % 7;
    const Triangle t = fixtures::random_triangle(n, 1000 + static_cast<std::uint64_t>(k));
    const double cl = chain_ladder_reserve(t);
    const double glm = fitted_reserve(fit_poisson(t).theta, n);
    CHECK(glm == doctest::Approx(cl).epsilon(1e-8));
  }
}

TEST_CASE("noise-free triangle recovers its parameters") {
  const int n = 5;
  Eigen::VectorXd theta(parameter_count(n));
  theta << 6.0, 0.1, -0.2, 0.3, 0.05, -0.5, -1.0, -1.7, -2.4;
  std::vector<double> v;
  for (const Cell c : observed_cells(n)) v.push_back(std::exp(linear_predictor(theta, n, c)));
  const GlmFit fit = fit_poisson(Triangle(n, v));
  CHECK((fit.theta - theta).lpNorm<Eigen::Infinity>() < 1e-8);
  const FullSquare sq = complete_square(Triangle(n, v), fit);
  for (const Cell c : future_cells(n)) {
    CHECK(sq(c.row, c.col) == doctest::Approx(std::exp(linear_predictor(theta, n, c))).epsilon(1e-10));
  }
}

TEST_CASE("hat matrix properties") {
  const Triangle t = fixtures::taylor_ashe();
  const GlmFit fit = fit_poisson(t);
  const DesignMatrix d = design_matrix(10);
  CHECK(fit.hat_diag.sum() == doctest::Approx(19.0).epsilon(1e-10));
  CHECK(fit.hat_diag(static_cast<Eigen::Index>(cell_index(10, {1, 10}))) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(fit.hat_diag(static_cast<Eigen::Index>(cell_index(10, {10, 1}))) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK((fit.hat_diag.array() >= -1e-12).all());
  CHECK((fit.hat_diag.array() <= 1.0 + 1e-12).all());
  const Eigen::MatrixXd h = hat_matrix(fit, d);
  CHECK((h.diagonal() - fit.hat_diag).lpNorm<Eigen::Infinity>() < 1e-10);

  const Triangle small = fixtures::random_triangle(4, 5);
  const GlmFit sf = fit_poisson(small);
  const Eigen::MatrixXd hs = hat_matrix(sf, design_matrix(4));
  CHECK((hs * hs - hs).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((hs - hs.transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
  // Direct formula W^1/2 X (X'WX)^-1 X' W^1/2.
  const Eigen::MatrixXd x = design_matrix(4).x;
  const Eigen::MatrixXd w = sf.mu.asDiagonal();
  const Eigen::MatrixXd sw = sf.mu.array().sqrt().matrix().asDiagonal();
  const Eigen::MatrixXd direct = sw * x * (x.transpose() * w * x).inverse() * x.transpose() * sw;
  CHECK((direct - hs).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("fitted margins match observed margins") {
  const Triangle t = fixtures::taylor_ashe();
  const GlmFit fit = fit_poisson(t);
  const auto cells = observed_cells(10);
  const double total = t.as_vector().sum();
  for (int idx = 1; idx <= 10; ++idx) {
    double yr = 0, mr = 0, yc = 0, mc = 0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (cells[k].row == idx) {
        yr += t.at(cells[k]);
        mr += fit.mu(static_cast<Eigen::Index>(k));
      }
      if (cells[k].col == idx) {
        yc += t.at(cells[k]);
        mc += fit.mu(static_cast<Eigen::Index>(k));
      }
    }
    CHECK(std::abs(yr - mr) < 1e-6 * total);
    CHECK(std::abs(yc - mc) < 1e-6 * total);
  }
}

TEST_CASE("reserve is scale equivariant") {
  const Triangle t = fixtures::random_triangle(8, 3);
  const double base = fitted_reserve(fit_poisson(t).theta, 8);
  CHECK(fitted_reserve(fit_poisson(t.scaled(37.5)).theta, 8) == doctest::Approx(37.5 * base).epsilon(1e-8));
}

TEST_CASE("development factors") {
  // Cumulative 10, 15 / 20 -> incremental 10, 5 / 20.
  const Triangle t(2, {10, 5, 20});
  CHECK(dev_factors(t)[2] == doctest::Approx(1.5));
  const FullSquare sq = complete_square(t, dev_factors(t));
  CHECK(sq(2, 2) == doctest::Approx(10.0));
  CHECK(complete_square(t, fit_poisson(t))(2, 2) == doctest::Approx(10.0).epsilon(1e-10));

  std::vector<double> doubling;
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= 5 - i; ++j) doubling.push_back(j == 1 ? 3.0 * i : 3.0 * i * std::pow(2.0, j - 2));
  const DevFactors f = dev_factors(Triangle(4, doubling));
  for (int j = 2; j <= 4; ++j) CHECK(f[j] == doctest::Approx(2.0));

  CHECK_THROWS_AS(dev_factors(Triangle(3, {0, 1, 2, 0, 3, 4})), FitError);
}

TEST_CASE("contaminated simulated triangle classical reserve") {
  const double r = fitted_reserve(fit_poisson(fixtures::simulated_contaminated()).theta, 10);
  CHECK(std::abs(r - 314240.0) < 1.0);
}

TEST_CASE("structurally zero columns fit as the limiting MLE") {
  const Triangle t = fixtures::schedule_p();
  const GlmFit fit = fit_poisson(t);
  CHECK(std::isinf(fit.theta(col_parameter(10, 9))));
  CHECK(std::isinf(fit.theta(col_parameter(10, 10))));
  CHECK(fitted_reserve(fit.theta, 10) == doctest::Approx(chain_ladder_reserve(t)).epsilon(1e-8));
  CHECK(fit.hat_diag.sum() == doctest::Approx(17.0).epsilon(1e-10));
  CHECK(fit.mu(static_cast<Eigen::Index>(cell_index(10, {1, 10}))) == 0.0);

  CHECK_THROWS_AS(fit_poisson(Triangle(3, {0, 0, 0, 2, 3, 4})), FitError);
  CHECK_THROWS_AS(fit_poisson(Triangle(3, {0, 2, 3, 0, 0, 0})), FitError);
}

TEST_CASE("quasi fit accepts real-valued responses") {
  const Triangle t = fixtures::taylor_ashe();
  const GlmFit fit = fit_poisson(t);
  const DesignMatrix d = design_matrix(10);
  const GlmFit again = fit_quasi(fit.mu, d);
  CHECK((again.theta - fit.theta).lpNorm<Eigen::Infinity>() < 1e-9);

  Eigen::VectorXd y = t.as_vector();
  y(5) += 1e-3;
  const GlmFit bumped = fit_quasi(y, d);
  CHECK((bumped.theta - fit.theta).lpNorm<Eigen::Infinity>() < 1e-6);

  y = t.as_vector();
  y(12) = -40000.0;
  const GlmFit negative = fit_quasi(y, d);
  CHECK(negative.converged);
  CHECK((d.x.transpose() * (y - negative.mu)).lpNorm<Eigen::Infinity>() < 1e-6 * y.sum());

  // A row whose only cell is negative has no positive solution.
  y = t.as_vector();
  y(54) = -5.0;
  CHECK_THROWS_AS(fit_quasi(y, d), FitError);
}

TEST_CASE("quasi fit over an arbitrary cell set") {
  const Triangle t = fixtures::random_triangle(5, 9);
  const GlmFit fit = fit_poisson(t);
  std::vector<Cell> cells = observed_cells(5);
  std::vector<double> y(t.values().begin(), t.values().end());
  for (int i = 2; i <= 5; ++i) {
    cells.push_back({i, 7 - i});
    y.push_back(std::exp(linear_predictor(fit.theta, 5, {i, 7 - i})));
  }
  const DesignMatrix d = design_matrix(5, cells);
  const GlmFit ext = fit_quasi(Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())), d);
  CHECK(ext.converged);
  CHECK((d.x.transpose() * (Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())) - ext.mu))
            .lpNorm<Eigen::Infinity>() < 1e-6);
}
