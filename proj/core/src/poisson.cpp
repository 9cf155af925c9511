#include "chainladder/poisson.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

namespace chainladder {

namespace {

// Double-precision internals; the long double default is several times slower.
using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

}  // namespace

double poisson_pmf(long k, double mu) {
  if (k < 0) return 0.0;
  if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
  return boost::math::gamma_p_derivative(static_cast<double>(k) + 1.0, mu, Policy());
}

double poisson_cdf(long k, double mu) {
  if (k < 0) return 0.0;
  if (mu == 0.0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(k) + 1.0, mu, Policy());
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_density(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double wilson_hilferty_z(double mu, double s) {
  return 3.0 * (std::cbrt(mu / s) - 1.0 + 1.0 / (9.0 * s)) * std::sqrt(s);
}

double wilson_hilferty_cdf(double y, double mu) {
  if (y < 0.0) return 0.0;
  return normal_upper_tail(wilson_hilferty_z(mu, y + 1.0));
}

}  // namespace chainladder
