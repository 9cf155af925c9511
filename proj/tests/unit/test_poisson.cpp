#include <doctest.h>

#include <cmath>

#include "chainladder/poisson.hpp"
#include "oracles.hpp"

using namespace chainladder;

TEST_CASE("Poisson pmf and cdf agree with direct summation") {
  for (double mu : {0.1, 1.0, 7.5, 100.0}) {
    for (long k : {-1L, 0L, 1L, 3L, 10L, 120L}) {
      const double pmf = k < 0 ? 0.0 : oracles::pmf_table(mu, k).back();
      CHECK(poisson_pmf(k, mu) == doctest::Approx(pmf).epsilon(1e-12));
      CHECK(poisson_cdf(k, mu) == doctest::Approx(oracles::poisson_cdf(k, mu)).epsilon(1e-12));
    }
  }
}

TEST_CASE("normal tail") {
  CHECK(normal_upper_tail(0.0) == doctest::Approx(0.5));
  CHECK(normal_upper_tail(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(normal_density(0.0) == doctest::Approx(0.3989422804014327));
}

TEST_CASE("Wilson-Hilferty cdf is within 5e-3 at psi-relevant points") {
  for (double mu : {5.0, 10.0, 50.0, 100.0, 1e3, 1e4, 1e5}) {
    for (double c : {0.5, 1.345, 3.0}) {
      const double s = std::sqrt(mu);
      for (double y : {std::floor(mu - c * s), std::floor(mu + c * s), std::floor(mu)}) {
        if (y < 0) continue;
        const double exact = poisson_cdf(static_cast<long>(y), mu);
        CHECK(std::abs(wilson_hilferty_cdf(y, mu) - exact) < 5e-3);
      }
    }
  }
}
