/**
 * @file poisson_glm.hpp
 * @brief Chain-ladder as a log-linear Poisson GLM.
 *
 * log(mu_ij) = tau + alpha_i + beta_j with alpha_1 = beta_1 = 0. The
 * maximum likelihood fit reproduces the deterministic chain-ladder, which
 * is used as the IRLS starting point. Rows or columns whose observed
 * amounts are all exactly zero are fitted as the limiting MLE: their
 * parameter is -inf and the corresponding fitted means are 0.
 */
#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "chainladder/triangle.hpp"

namespace chainladder {

/// Design restricted to the parameters and cells that take part in a fit.
struct ActiveSet {
  std::vector<Eigen::Index> params;  ///< active parameter positions
  std::vector<Eigen::Index> cells;   ///< active design rows
  Eigen::MatrixXd x;                 ///< reduced design, cells x params

  Eigen::Index parameter_count() const { return static_cast<Eigen::Index>(params.size()); }
  Eigen::Index cell_count() const { return static_cast<Eigen::Index>(cells.size()); }

  Eigen::VectorXd gather_cells(const Eigen::VectorXd& full) const;
  Eigen::VectorXd gather_params(const Eigen::VectorXd& theta) const;
  /// Full-length parameter vector with -inf on inactive parameters.
  Eigen::VectorXd expand_params(const Eigen::VectorXd& reduced, Eigen::Index p) const;
  /// Full-length cell vector with @p fill on inactive cells.
  Eigen::VectorXd expand_cells(const Eigen::VectorXd& reduced, Eigen::Index rows, double fill) const;
};

/// Drops row and column parameters whose cells all carry exactly zero.
/// Throws FitError when row 1, column 1 or every cell is structurally zero.
ActiveSet active_set_from_data(const DesignMatrix& design, const Eigen::VectorXd& y);

/// Active set implied by the finite entries of a fitted parameter vector.
ActiveSet active_set_from_theta(const DesignMatrix& design, const Eigen::VectorXd& theta);

struct IrlsControl {
  int max_iterations = 100;
  double deviance_tol = 1e-12;  ///< relative change of the quasi-deviance
  double step_tol = 1e-10;      ///< max-norm of the parameter update
};

struct QuasiOptions {
  IrlsControl control{};
  std::optional<Eigen::VectorXd> start;
  bool compute_hat = false;
};

struct GlmFit {
  int n = 0;
  Eigen::VectorXd theta;     ///< (tau, alpha_2..alpha_n, beta_2..beta_n)
  Eigen::VectorXd mu;        ///< fitted means per design row
  Eigen::VectorXd hat_diag;  ///< diagonal of W^1/2 X (X'WX)^-1 X' W^1/2, if computed
  int iterations = 0;
  bool converged = false;
};

/// Poisson maximum likelihood fit of an observed triangle, hat diagonal
/// included. Throws FitError on non-convergence.
GlmFit fit_poisson(const Triangle& triangle, const IrlsControl& control = {});

/// Solves X'(y - exp(X theta)) = 0 for any real @p y (quasi-likelihood).
/// Used for bootstrap pseudo-histories, which may be negative. Throws
/// FitError if no positive solution exists or IRLS fails.
GlmFit fit_quasi(const Eigen::VectorXd& y, const DesignMatrix& design, const QuasiOptions& options = {});

/// Chain-ladder parameters for a triangle-shaped @p y (row-major observed
/// cells). Empty when a development-factor denominator vanishes; entries
/// are NaN when the implied fitted increment is not positive.
std::optional<Eigen::VectorXd> chain_ladder_theta(const Eigen::VectorXd& y, int n);

/// Development factors f_2..f_n.
struct DevFactors {
  int n = 0;
  std::vector<double> f;  ///< f[j - 2] holds f_j

  double operator[](int j) const { return f[static_cast<std::size_t>(j - 2)]; }
};

/// Ratio of cumulative column sums over the rows observed in both columns.
/// Throws FitError on a zero denominator.
DevFactors dev_factors(const Triangle& triangle);

/// Lower triangle by recursive multiplication of cumulative claims.
FullSquare complete_square(const Triangle& triangle, const DevFactors& factors);

/// Lower triangle by exp(x' theta).
FullSquare complete_square(const Triangle& triangle, const GlmFit& fit);

/// Chain-ladder projection of a staircase: row i of the n x n incremental
/// matrix is observed in columns 1..last[i - 1], with last non-increasing.
/// Unobserved cells are filled in; observed ones are kept. On a triangle
/// the fill equals the quasi-Poisson fitted values whenever those exist,
/// and stays defined when an implied increment is negative. Throws
/// FitError on a zero development-factor denominator.
Eigen::MatrixXd chain_ladder_completion(const Eigen::MatrixXd& increments, const std::vector<int>& last);

/// Incremental n x n matrix holding a triangle's row-major cells.
Eigen::MatrixXd triangle_matrix(const Eigen::VectorXd& cells, int n);

/// Sum of exp(x' theta) over the future cells.
double fitted_reserve(const Eigen::VectorXd& theta, int n);

/// Per accident year sum of exp(x' theta) over the future cells (index 0 is year 1).
std::vector<double> fitted_reserve_by_year(const Eigen::VectorXd& theta, int n);

/// Dense symmetric hat matrix W^1/2 X (X'WX)^-1 X' W^1/2 over the design
/// rows; rows and columns of structurally zero cells are 0.
Eigen::MatrixXd hat_matrix(const GlmFit& fit, const DesignMatrix& design);

}  // namespace chainladder
