/**
 * @file bootstrap.hpp
 * @brief Residual bootstraps of the chain-ladder reserve.
 *
 * Every engine resamples residuals of a point fit, rebuilds a pseudo-history
 * y = r sqrt(mu) + mu and projects it to a completed square:
 *
 *  - TCL: classical fit, classical refit.
 *  - CB:  robust fit, robust refit.
 *  - WB:  robust fit, winsorized residuals, robust refit.
 *  - IFB: robust fit, influence-weighted resampling, classical refit.
 *  - FRB: robust fit, one linear solve per replicate instead of a refit.
 *
 * Classical refits use the chain-ladder completion, the closed form of the
 * quasi-Poisson fit, so pseudo-histories with negative implied increments
 * still yield a reserve.
 *
 * Replicate b draws from stream_rng(seed, b), so results do not depend on
 * the thread count. Refits that fail are replaced by further streams
 * B, B + 1, ... in order.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "chainladder/poisson_glm.hpp"
#include "chainladder/residuals.hpp"
#include "chainladder/robust_glm.hpp"
#include "chainladder/triangle.hpp"

namespace chainladder {

enum class Method { tcl, cb, wb, ifb, frb };

std::string_view to_string(Method method);

/// Parses "tcl", "cb", "wb", "ifb" or "frb". Throws ParseError.
Method parse_method(std::string_view name);

struct IfbParams {
  double d = 30.0;
  double gamma = 10.0;
  double quantile_level = 0.90;
};

struct BootstrapOptions {
  Method method = Method::tcl;
  ResidualVariant variant = ResidualVariant::cordeiro;
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  double huber_c = kDefaultHuberC;
  double winsor_fraction = 0.10;
  IfbParams ifb{};
  int threads = 0;                  ///< 0: see resolve_threads
  double max_failure_rate = 0.05;
};

struct BootstrapResult {
  std::vector<double> reserves;     ///< one per successful replicate, stream order
  Method method = Method::tcl;
  ResidualVariant variant = ResidualVariant::cordeiro;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::size_t failed = 0;
};

/// Draws one residual per observed cell from the pool cells of @p rs,
/// uniformly or with @p probs (per cell, zero outside the pool).
Eigen::VectorXd resample_residuals(const ResidualSet& rs, const std::optional<Eigen::VectorXd>& probs,
                                   std::mt19937_64& rng);

/// r sqrt(mu) + mu.
Eigen::VectorXd pseudo_history(const Eigen::VectorXd& r, const Eigen::VectorXd& mu);

/// Replaces the floor(fraction m) smallest pool residuals by the next order
/// statistic and the same number of largest by the matching one from the
/// top. Excluded cells are left alone.
ResidualSet winsorize(const ResidualSet& rs, double fraction);

struct IfbWeights {
  Eigen::VectorXd resif;   ///< |y - mu| / sqrt(mu)
  double cutoff = 0.0;     ///< quantile_level quantile of resif over the pool
  double d = 30.0;
  double gamma = 10.0;
  Eigen::VectorXd probs;   ///< normalized over the pool, 0 elsewhere
};

/// [1 + (x - c)^2 / (gamma d^2)]^(-(gamma + 1)/2) above c, 1 below.
double ifb_weight(double x, double cutoff, double d, double gamma);

/// Resampling probabilities from the robust influence of each cell.
IfbWeights ifb_weights(const Triangle& triangle, const RobustFit& fit, const std::vector<bool>& excluded,
                       const IfbParams& params = {});

/// Linearization of the robust estimating function at its root.
struct FrbState {
  ActiveSet act;
  Eigen::VectorXd theta_hat;        ///< full-length robust estimate
  Eigen::VectorXd mu;               ///< active-cell fitted means
  Eigen::VectorXd w;                ///< active-cell design weights
  double c = kDefaultHuberC;
  Eigen::MatrixXd grad;             ///< d psi_N / d theta over the active parameters
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  double condition = 0.0;           ///< 2-norm condition number of grad

  /// theta_hat - grad^-1 [psi_N(theta_hat; y) - psi_N(theta_hat; mu)], full length.
  Eigen::VectorXd replicate_theta(const Eigen::VectorXd& y_full) const;
};

/// Throws FitError if the gradient is singular.
FrbState frb_prepare(const Triangle& triangle, const RobustFit& fit);

/// One bootstrap draw.
struct Replicate {
  Eigen::VectorXd pseudo;   ///< pseudo-history over the observed cells
  Eigen::MatrixXd square;   ///< n x n: pseudo-history above, fitted future cells below
  Eigen::VectorXd theta;    ///< replicate parameters; empty for classical refits

  double reserve() const;
};

/// Sum over the cells i + j > n + 1 of an n x n matrix.
double lower_sum(const Eigen::MatrixXd& square);

/// Point fit, residuals and per-method state shared read-only by replicates.
class ReplicateEngine {
 public:
  ReplicateEngine(const Triangle& triangle, const BootstrapOptions& options);

  /// Replicate for stream @p index; empty when the refit fails.
  std::optional<Replicate> draw(std::uint64_t index) const;

  const Triangle& triangle() const { return triangle_; }
  const BootstrapOptions& options() const { return options_; }
  /// Parameters of the point fit that replicates perturb.
  const Eigen::VectorXd& point_theta() const { return theta_; }
  const Eigen::VectorXd& point_mu() const { return mu_; }
  const ResidualSet& residuals() const { return residuals_; }
  const std::optional<Eigen::VectorXd>& probs() const { return probs_; }

 private:
  void refit(Replicate& rep) const;

  Triangle triangle_;
  BootstrapOptions options_;
  DesignMatrix design_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd mu_;
  ResidualSet residuals_;
  std::optional<Eigen::VectorXd> probs_;
  std::optional<FrbState> frb_;
};

/// Runs @p fn over streams 0..count-1, replacing failures by further streams
/// until @p count succeed. Returns the successes in stream order and the
/// failure count. Throws BootstrapError past options.max_failure_rate.
template <typename T, typename Fn>
std::pair<std::vector<T>, std::size_t> run_replicates(std::size_t count, const BootstrapOptions& options, Fn&& fn);

BootstrapResult run_bootstrap(const ReplicateEngine& engine);
BootstrapResult run_bootstrap(const Triangle& triangle, const BootstrapOptions& options);

/// TCL (classical) or CB (robust) bootstrap.
BootstrapResult bootstrap_classical(const Triangle& triangle, bool robust, BootstrapOptions options);
BootstrapResult bootstrap_winsorized(const Triangle& triangle, BootstrapOptions options);
BootstrapResult bootstrap_ifb(const Triangle& triangle, BootstrapOptions options);
BootstrapResult bootstrap_frb(const Triangle& triangle, BootstrapOptions options);

/// Linear interpolation between order statistics at 1 + p (B - 1).
double quantile(std::vector<double> values, double p);

}  // namespace chainladder

#include "chainladder/detail/run_replicates.hpp"
