/**
 * @file poisson.hpp
 * @brief Poisson probabilities and the Wilson-Hilferty normal approximation.
 */
#pragma once

namespace chainladder {

/// P(Y = k) for Y ~ Poisson(mu); 0 for k < 0.
double poisson_pmf(long k, double mu);

/// P(Y <= k) for Y ~ Poisson(mu); 0 for k < 0.
double poisson_cdf(long k, double mu);

/// Standard normal upper tail, 1 - Phi(z).
double normal_upper_tail(double z);

/// Standard normal density.
double normal_density(double z);

/// Wilson-Hilferty z statistic 3[(mu/s)^(1/3) - 1 + 1/(9s)] sqrt(s).
double wilson_hilferty_z(double mu, double s);

/// P(Y <= y) ~ 1 - Phi(z) with z = wilson_hilferty_z(mu, y + 1).
double wilson_hilferty_cdf(double y, double mu);

}  // namespace chainladder
