/**
 * @file robust_glm.hpp
 * @brief Huber-type robust Poisson GLM (Mallows M-estimator).
 *
 * Solves sum_k (psi_c(r_k) - E[psi_c(r_k)]) w_k sqrt(mu_k) x_k = 0 with
 * Pearson residuals r_k = (y_k - mu_k) / sqrt(mu_k). The equations are the
 * gradient of a potential, so they are solved by a line-searched modified
 * Newton ascent started at the classical fit.
 */
#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "chainladder/poisson_glm.hpp"
#include "chainladder/triangle.hpp"

namespace chainladder {

inline constexpr double kDefaultHuberC = 1.345;

/// Huber psi: r clipped to [-c, c].
double huber_psi(double r, double c);

/// E[psi_c((Y - mu)/sqrt(mu))] for Y ~ Poisson(mu), exact probabilities.
double expected_psi(double mu, double c);

/// E[psi_c(r) r] for Y ~ Poisson(mu), exact probabilities. Equals 1 when
/// clipping never occurs.
double expected_psi_times_score(double mu, double c);

/// Wilson-Hilferty approximation of expected_psi, smooth in mu.
double expected_psi_wh(double mu, double c);

/// d expected_psi_wh / d log(mu).
double expected_psi_wh_dlogmu(double mu, double c);

struct RobustOptions {
  double c = kDefaultHuberC;
  std::optional<Eigen::VectorXd> x_weights;  ///< w(x_k) per design row, default 1
  std::optional<Eigen::VectorXd> start;      ///< full-length theta, default classical fit
  int max_iterations = 500;
  double step_tol = 1e-10;
};

struct RobustFit {
  int n = 0;
  double c = kDefaultHuberC;
  Eigen::VectorXd theta;
  Eigen::VectorXd mu;            ///< fitted means per design row
  Eigen::VectorXd x_weights;     ///< w(x_k)
  Eigen::VectorXd residuals;     ///< (y - mu)/sqrt(mu), 0 on structurally zero cells
  Eigen::VectorXd rob_weights;   ///< psi_c(r)/r, 1 when |r| <= c
  Eigen::VectorXd hat_diag;      ///< diagonal of the robust hat matrix
  int iterations = 0;
  bool converged = false;
};

/// Robust fit of an observed triangle. Throws FitError.
RobustFit fit_robust(const Triangle& triangle, const RobustOptions& options = {});

/// Robust fit of an arbitrary real response over @p design. Throws FitError.
RobustFit fit_robust(const Eigen::VectorXd& y, const DesignMatrix& design, const RobustOptions& options = {});

/// Oblique projection X (X'BX)^-1 X'B, B = diag(E[psi_c(r) r] mu w).
Eigen::MatrixXd robust_hat_matrix(const RobustFit& fit, const DesignMatrix& design);

/// psi_c(r)/r per cell (1 when |r| <= c).
Eigen::VectorXd robustness_weights(const RobustFit& fit);

struct FlaggedCell {
  Cell cell;
  double weight = 1.0;
};

/// Cells whose weight is below @p threshold, ascending by weight.
std::vector<FlaggedCell> flag_outliers(const Eigen::VectorXd& weights, const std::vector<Cell>& cells,
                                       double threshold);

/// Estimating function psi_N over the active parameters, exact E[psi_c].
Eigen::VectorXd estimating_function(const ActiveSet& act, const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& w, double c);

/// Analytic d psi_N / d theta at (theta, y), with d E[psi_c] / d theta taken
/// from the Wilson-Hilferty approximation.
Eigen::MatrixXd estimating_gradient(const ActiveSet& act, const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& w, double c);

}  // namespace chainladder
