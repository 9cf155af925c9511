/**
 * @file residuals.hpp
 * @brief Pearson residuals and their small-sample adjustments.
 */
#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "chainladder/poisson_glm.hpp"
#include "chainladder/robust_glm.hpp"

namespace chainladder {

enum class ResidualVariant { raw, england, pinheiro, cordeiro };

std::string_view to_string(ResidualVariant variant);

/// Parses "raw", "england", "pinheiro" or "cordeiro". Throws ParseError.
ResidualVariant parse_residual_variant(std::string_view name);

struct ResidualSet {
  Eigen::VectorXd values;            ///< row-major over observed cells
  ResidualVariant variant = ResidualVariant::raw;
  std::vector<bool> excluded;        ///< kept out of the resampling pool

  /// Indices of the cells that may be drawn from.
  std::vector<Eigen::Index> pool() const;
};

/// (y - mu)/sqrt(mu). Corner cells (1, n), (n, 1) and structurally zero
/// cells (mu = y = 0) are excluded, the latter with value 0. Throws
/// std::invalid_argument on mu <= 0 elsewhere or a non-triangular length.
ResidualSet pearson(const Eigen::VectorXd& y, const Eigen::VectorXd& mu);

/// sqrt(N / (N - p)) r.
ResidualSet adjust_england(const ResidualSet& rs, Eigen::Index n_obs, Eigen::Index n_params);

/// r / sqrt(1 - h). Excluded cells become 0.
ResidualSet adjust_pinheiro(const ResidualSet& rs, const Eigen::VectorXd& hat_diag);

/// First-order bias term -1/2 (I - H) J z with J z = diag(H) / sqrt(mu);
/// 0 where mu = 0.
Eigen::VectorXd cordeiro_mean(const Eigen::MatrixXd& hat, const Eigen::VectorXd& mu);

/// (r - E[r]) / sqrt(1 - h) with E[r] from cordeiro_mean. Excluded cells
/// become 0.
ResidualSet adjust_cordeiro(const ResidualSet& rs, const Eigen::MatrixXd& hat, const Eigen::VectorXd& mu);

/// Residuals of a classical fit of @p triangle in the requested variant.
ResidualSet fit_residuals(const Triangle& triangle, const GlmFit& fit, ResidualVariant variant);

/// Residuals of a robust fit; leverage from the robust hat matrix mapped to
/// the residual scale, W^1/2 H W^-1/2.
ResidualSet fit_residuals(const Triangle& triangle, const RobustFit& fit, ResidualVariant variant);

}  // namespace chainladder
