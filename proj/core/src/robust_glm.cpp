#include "chainladder/robust_glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainladder/error.hpp"
#include "chainladder/poisson.hpp"

namespace chainladder {

namespace {

constexpr double kMaxEta = 700.0;
constexpr double kVanishingMu = 1e-12;
constexpr double kNewtonRadius = 1.0;  // max |change of eta| of an accepted Newton step
constexpr int kStallIterations = 50;
constexpr double kStallTol = 1e-4;

struct Bounds {
  long j1;
  long j2;
};

// Last count clipped from below and last count not clipped from above.
Bounds clip_bounds(double mu, double c) {
  const double s = std::sqrt(mu);
  const double lo = std::floor(mu - c * s);
  return {static_cast<long>(std::max(lo, -1.0)), static_cast<long>(std::floor(mu + c * s))};
}

// Exact Poisson moments of psi_c at one mean, from two pmf and two cdf evaluations.
struct PsiMoments {
  double e_psi;         // E[psi_c(r)]
  double e_psi_r;       // E[psi_c(r) r]
  double de_psi_deta;   // d E[psi_c(r)] / d log(mu), clip bounds held fixed
};

PsiMoments psi_moments(double mu, double c) {
  const auto [j1, j2] = clip_bounds(mu, c);
  const double s = std::sqrt(mu);
  const double p1 = poisson_pmf(j1, mu);
  const double p2 = poisson_pmf(j2, mu);
  const double f1 = poisson_cdf(j1, mu);
  const double f2 = poisson_cdf(j2, mu);
  // p(j - 1) = p(j) j / mu and F(j - 1) = F(j) - p(j).
  const double p1m = j1 > 0 ? p1 * static_cast<double>(j1) / mu : 0.0;
  const double p2m = j2 > 0 ? p2 * static_cast<double>(j2) / mu : 0.0;
  const double curvature = p1m - p1 - p2m + p2;
  PsiMoments m{};
  m.e_psi = c * (1.0 - f2 - f1) + s * (p1 - p2);
  m.e_psi_r = c * s * (p1 + p2) + mu * curvature + (f2 - p2) - (f1 - p1);
  m.de_psi_deta = mu * (c * (p1 + p2) + (p1 - p2) / (2.0 * s) + s * curvature);
  return m;
}

// d z / d log(mu) for z = wilson_hilferty_z(mu, s) with ds / d log(mu) = ds_deta.
double wh_z_dlogmu(double mu, double s, double ds_deta) {
  const double a = std::cbrt(mu / s);
  const double root = std::sqrt(s);
  return 3.0 * (a / 3.0 * (1.0 - ds_deta / s) - ds_deta / (9.0 * s * s)) * root +
         3.0 * (a - 1.0 + 1.0 / (9.0 * s)) * ds_deta / (2.0 * root);
}

// Per-cell terms of the estimating function and its curvature.
struct CellTerms {
  Eigen::VectorXd mu;
  Eigen::VectorXd d;      // (psi - E psi) w sqrt(mu)
  Eigen::VectorXd curv;   // -d d_k / d eta_k
  Eigen::VectorXd secant; // psi(r)/r mu w
};

CellTerms cell_terms(const ActiveSet& act, const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w, double c, bool with_curvature) {
  const Eigen::VectorXd eta = act.x * theta;
  if (eta.maxCoeff() > kMaxEta) throw FitError("robust fit diverged (fitted mean overflow)");
  CellTerms t;
  const Eigen::Index m = act.cell_count();
  t.mu = eta.array().exp();
  t.d.resize(m);
  if (with_curvature) {
    t.curv.resize(m);
    t.secant.resize(m);
  }
  for (Eigen::Index k = 0; k < m; ++k) {
    const double mu = t.mu(k);
    const double s = std::sqrt(mu);
    const double r = (y(k) - mu) / s;
    const double psi = huber_psi(r, c);
    PsiMoments mom{};
    try {
      mom = psi_moments(mu, c);
    } catch (const std::runtime_error& e) {
      throw FitError(std::string("robust fit diverged (") + e.what() + ")");
    }
    t.d(k) = (psi - mom.e_psi) * w(k) * s;
    if (with_curvature) {
      const double dpsi = std::abs(r) <= c ? -0.5 * (y(k) + mu) / s : 0.0;
      t.curv(k) = -w(k) * s * (dpsi + 0.5 * (psi - mom.e_psi) - mom.de_psi_deta);
      t.secant(k) = (std::abs(r) <= c ? 1.0 : c / std::abs(r)) * mu * w(k);
    }
  }
  return t;
}

// Size of the estimating function's terms, sum over cells of |x d|.
double score_scale(const ActiveSet& act, const CellTerms& t) {
  return (act.x.transpose() * t.d.cwiseAbs()).lpNorm<Eigen::Infinity>();
}

Eigen::VectorXd fisher_weights(const Eigen::VectorXd& mu, const Eigen::VectorXd& w, double c) {
  Eigen::VectorXd b(mu.size());
  for (Eigen::Index k = 0; k < mu.size(); ++k) b(k) = psi_moments(mu(k), c).e_psi_r * mu(k) * w(k);
  return b;
}

// Row or column parameters all of whose cells have a vanishing mean. The
// estimating function has no finite root in them; the limit is -inf.
std::vector<Eigen::Index> vanishing_params(const ActiveSet& act, const Eigen::VectorXd& mu) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index p = 0; p < act.parameter_count(); ++p) {
    if (act.params[static_cast<std::size_t>(p)] == 0) continue;
    bool all = true;
    for (Eigen::Index k = 0; k < act.cell_count() && all; ++k) {
      if (act.x(k, p) != 0.0 && mu(k) >= kVanishingMu) all = false;
    }
    if (all) out.push_back(act.params[static_cast<std::size_t>(p)]);
  }
  return out;
}

Eigen::VectorXd resolve_weights(const RobustOptions& options, Eigen::Index rows) {
  if (!options.x_weights) return Eigen::VectorXd::Ones(rows);
  if (options.x_weights->size() != rows) throw std::invalid_argument("x_weights length does not match design");
  if ((options.x_weights->array() <= 0.0).any()) throw std::invalid_argument("x_weights must be positive");
  return *options.x_weights;
}

// Step length along an ascent direction of the potential whose gradient is
// the estimating function: approximately zeroes phi(a) = U(theta + a delta)' delta.
double line_search(const ActiveSet& act, const Eigen::VectorXd& theta, const Eigen::VectorXd& delta,
                   const Eigen::VectorXd& y, const Eigen::VectorXd& w, double c, double phi0) {
  auto phi = [&](double a) {
    try {
      return (act.x.transpose() * cell_terms(act, theta + a * delta, y, w, c, false).d).dot(delta);
    } catch (const FitError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  const double accept = 0.1 * phi0;
  double lo = 0.0;
  double plo = phi0;
  double hi = 1.0;
  double phi_hi = phi(hi);
  if (std::abs(phi_hi) <= accept) return hi;
  while (phi_hi > 0.0) {
    if (hi >= 64.0) return hi;
    lo = hi;
    plo = phi_hi;
    hi *= 2.0;
    phi_hi = phi(hi);
    if (std::abs(phi_hi) <= accept) return hi;
  }
  // Illinois regula falsi on [lo, hi] with phi(lo) > 0 > phi(hi).
  int side = 0;
  for (int it = 0; it < 60; ++it) {
    double a = std::isfinite(phi_hi) ? lo + (hi - lo) * plo / (plo - phi_hi) : 0.5 * (lo + hi);
    if (!(a > lo && a < hi)) a = 0.5 * (lo + hi);
    const double pa = phi(a);
    if (std::abs(pa) <= accept) return a;
    if (pa > 0.0) {
      lo = a;
      plo = pa;
      if (side == 1 && std::isfinite(phi_hi)) phi_hi *= 0.5;
      side = 1;
    } else {
      hi = a;
      phi_hi = pa;
      if (side == -1) plo *= 0.5;
      side = -1;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double huber_psi(double r, double c) { return std::clamp(r, -c, c); }

double expected_psi(double mu, double c) { return psi_moments(mu, c).e_psi; }

double expected_psi_times_score(double mu, double c) { return psi_moments(mu, c).e_psi_r; }

double expected_psi_wh(double mu, double c) {
  const double s = std::sqrt(mu);
  const double j1 = std::max(0.0, mu - c * s);
  const double j2 = mu + c * s;
  const double zh1 = wilson_hilferty_z(mu, j1 + 1.5);
  const double zt1 = wilson_hilferty_z(mu, j1 + 0.5);
  const double zh2 = wilson_hilferty_z(mu, j2 + 1.5);
  const double zt2 = wilson_hilferty_z(mu, j2 + 0.5);
  return c * (1.0 - normal_upper_tail(zh2) - normal_upper_tail(zh1)) +
         s * (normal_upper_tail(zh1) - normal_upper_tail(zt1) - normal_upper_tail(zh2) + normal_upper_tail(zt2));
}

double expected_psi_wh_dlogmu(double mu, double c) {
  const double s = std::sqrt(mu);
  const bool clamped = mu - c * s <= 0.0;
  const double j1 = clamped ? 0.0 : mu - c * s;
  const double j2 = mu + c * s;
  const double dj1 = clamped ? 0.0 : mu - 0.5 * c * s;
  const double dj2 = mu + 0.5 * c * s;

  const double zh1 = wilson_hilferty_z(mu, j1 + 1.5);
  const double zt1 = wilson_hilferty_z(mu, j1 + 0.5);
  const double zh2 = wilson_hilferty_z(mu, j2 + 1.5);
  const double zt2 = wilson_hilferty_z(mu, j2 + 0.5);
  const double dzh1 = wh_z_dlogmu(mu, j1 + 1.5, dj1);
  const double dzt1 = wh_z_dlogmu(mu, j1 + 0.5, dj1);
  const double dzh2 = wh_z_dlogmu(mu, j2 + 1.5, dj2);
  const double dzt2 = wh_z_dlogmu(mu, j2 + 0.5, dj2);

  // d/deta Q(z) = -phi(z) dz.
  const double gh1 = normal_density(zh1) * dzh1;
  const double gt1 = normal_density(zt1) * dzt1;
  const double gh2 = normal_density(zh2) * dzh2;
  const double gt2 = normal_density(zt2) * dzt2;
  const double bracket =
      normal_upper_tail(zh1) - normal_upper_tail(zt1) - normal_upper_tail(zh2) + normal_upper_tail(zt2);
  return c * (gh2 + gh1) + 0.5 * s * bracket + s * (-gh1 + gt1 + gh2 - gt2);
}

// --- Fit --------------------------------------------------------------------

RobustFit fit_robust(const Eigen::VectorXd& y_full, const DesignMatrix& design, const RobustOptions& options) {
  if (!(options.c > 0.0)) throw std::invalid_argument("Huber constant must be positive");
  if (y_full.size() != design.rows()) throw std::invalid_argument("response length does not match design");
  const Eigen::VectorXd w_full = resolve_weights(options, design.rows());
  ActiveSet act = active_set_from_data(design, y_full);
  Eigen::VectorXd y = act.gather_cells(y_full);
  Eigen::VectorXd w = act.gather_cells(w_full);
  const double c = options.c;

  Eigen::VectorXd theta = options.start ? act.gather_params(*options.start)
                                        : act.gather_params(fit_quasi(y_full, design).theta);
  if (!theta.allFinite()) throw FitError("robust start has non-finite active parameters");

  RobustFit fit;
  fit.n = design.n;
  fit.c = c;
  // Modified Newton ascent on the potential whose gradient is the estimating
  // function: cells with negative curvature contribute it exactly, the rest
  // contribute their Huber secant weight.
  CellTerms cur = cell_terms(act, theta, y, w, c, true);
  // Best iterate so far, for roots that sit on a clipping kink where the
  // iteration oscillates without meeting the strict tolerance.
  double best_norm = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  int best_iter = 0;
  // Sends parameters whose cells all vanish to -inf and shrinks the active set.
  auto prune = [&] {
    const auto gone = vanishing_params(act, cur.mu);
    if (gone.empty()) return false;
    Eigen::VectorXd full = act.expand_params(theta, design.cols());
    for (Eigen::Index j : gone) full(j) = -std::numeric_limits<double>::infinity();
    act = active_set_from_theta(design, full);
    y = act.gather_cells(y_full);
    w = act.gather_cells(w_full);
    theta = act.gather_params(full);
    cur = cell_terms(act, theta, y, w, c, true);
    best_norm = std::numeric_limits<double>::infinity();
    return true;
  };
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    fit.iterations = iter;
    const Eigen::VectorXd score = act.x.transpose() * cur.d;
    const double score_norm = score.lpNorm<Eigen::Infinity>();
    if (score_norm < best_norm) {
      best_norm = score_norm;
      best_theta = theta;
      best_iter = iter;
    } else if (iter - best_iter >= kStallIterations && best_norm <= kStallTol * std::max(score_scale(act, cur), 1.0)) {
      theta = best_theta;
      cur = cell_terms(act, theta, y, w, c, true);
      fit.converged = true;
      break;
    }

    // Newton step, kept when it stays within kNewtonRadius and halves the
    // estimating function. The ascent below alone is linear once most
    // cells are clipped.
    {
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(act.x.transpose() * cur.curv.asDiagonal() * act.x);
      const Eigen::VectorXd newton = lu.solve(score);
      if (newton.allFinite()) {
        const Eigen::VectorXd trial = theta + newton;
        if ((act.x * newton).lpNorm<Eigen::Infinity>() <= kNewtonRadius) {
          try {
            const CellTerms next = cell_terms(act, trial, y, w, c, true);
            if ((act.x.transpose() * next.d).norm() <= 0.5 * score.norm()) {
              theta = trial;
              cur = next;
              if (newton.lpNorm<Eigen::Infinity>() < options.step_tol) {
                fit.converged = true;
                break;
              }
              continue;
            }
          } catch (const FitError&) {
          }
        }
      }
    }

    Eigen::VectorXd h(act.cell_count());
    for (Eigen::Index k = 0; k < h.size(); ++k) {
      h(k) = cur.curv(k) > 0.0 ? std::max(cur.curv(k), 1e-3 * cur.secant(k)) : cur.secant(k);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(act.x.transpose() * h.asDiagonal() * act.x);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw FitError("robust curvature matrix is singular");
    const Eigen::VectorXd delta = ldlt.solve(score);
    if (!delta.allFinite()) throw FitError("robust curvature matrix is singular");

    if (delta.lpNorm<Eigen::Infinity>() < options.step_tol) {
      theta += delta;
      cur = cell_terms(act, theta, y, w, c, true);
      fit.converged = true;
      break;
    }
    const double phi0 = score.dot(delta);
    const double step = phi0 > 0.0 ? line_search(act, theta, delta, y, w, c, phi0) : 0.0;
    theta += step * delta;
    cur = cell_terms(act, theta, y, w, c, true);
    if (prune()) continue;
    if ((step * delta).lpNorm<Eigen::Infinity>() < options.step_tol) {
      const double residual = (act.x.transpose() * cur.d).lpNorm<Eigen::Infinity>();
      if (residual <= 1e-6 * std::max(score_scale(act, cur), 1.0)) {
        fit.converged = true;
        break;
      }
    }
  }
  if (!fit.converged) {
    throw FitError("robust fit did not converge in " + std::to_string(options.max_iterations) + " iterations");
  }

  fit.theta = act.expand_params(theta, design.cols());
  fit.mu = act.expand_cells(cur.mu, design.rows(), 0.0);
  fit.x_weights = w_full;
  Eigen::VectorXd r(act.cell_count());
  for (Eigen::Index k = 0; k < act.cell_count(); ++k) r(k) = (y(k) - cur.mu(k)) / std::sqrt(cur.mu(k));
  fit.residuals = act.expand_cells(r, design.rows(), 0.0);
  fit.rob_weights = robustness_weights(fit);

  const Eigen::VectorXd b = fisher_weights(cur.mu, w, c);
  const Eigen::MatrixXd a = act.x.array().colwise() * b.array().sqrt();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(act.cell_count(), act.parameter_count());
  fit.hat_diag = act.expand_cells(q.rowwise().squaredNorm(), design.rows(), 0.0);
  return fit;
}

RobustFit fit_robust(const Triangle& triangle, const RobustOptions& options) {
  return fit_robust(triangle.as_vector(), design_matrix(triangle.n()), options);
}

Eigen::MatrixXd robust_hat_matrix(const RobustFit& fit, const DesignMatrix& design) {
  const ActiveSet act = active_set_from_theta(design, fit.theta);
  const Eigen::VectorXd mu = act.gather_cells(fit.mu);
  const Eigen::VectorXd w = act.gather_cells(fit.x_weights);
  const Eigen::VectorXd b = fisher_weights(mu, w, fit.c);
  const Eigen::MatrixXd info = act.x.transpose() * b.asDiagonal() * act.x;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw FitError("X'BX is singular");
  const Eigen::MatrixXd xtb = act.x.transpose() * b.asDiagonal();
  const Eigen::MatrixXd h_active = act.x * ldlt.solve(xtb);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(design.rows(), design.rows());
  for (Eigen::Index r = 0; r < act.cell_count(); ++r) {
    for (Eigen::Index s = 0; s < act.cell_count(); ++s) {
      h(act.cells[static_cast<std::size_t>(r)], act.cells[static_cast<std::size_t>(s)]) = h_active(r, s);
    }
  }
  return h;
}

Eigen::VectorXd robustness_weights(const RobustFit& fit) {
  Eigen::VectorXd out(fit.residuals.size());
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    const double r = std::abs(fit.residuals(k));
    out(k) = r <= fit.c ? 1.0 : fit.c / r;
  }
  return out;
}

std::vector<FlaggedCell> flag_outliers(const Eigen::VectorXd& weights, const std::vector<Cell>& cells,
                                       double threshold) {
  if (static_cast<std::size_t>(weights.size()) != cells.size()) {
    throw std::invalid_argument("weights and cells differ in length");
  }
  std::vector<FlaggedCell> out;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const double wk = weights(static_cast<Eigen::Index>(k));
    if (wk < threshold) out.push_back({cells[k], wk});
  }
  std::stable_sort(out.begin(), out.end(), [](const FlaggedCell& a, const FlaggedCell& b) { return a.weight < b.weight; });
  return out;
}

// --- Estimating function ----------------------------------------------------

Eigen::VectorXd estimating_function(const ActiveSet& act, const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& w, double c) {
  return act.x.transpose() * cell_terms(act, theta, y, w, c, false).d;
}

Eigen::MatrixXd estimating_gradient(const ActiveSet& act, const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& w, double c) {
  const Eigen::VectorXd mu = (act.x * theta).array().exp();
  Eigen::VectorXd g(act.cell_count());
  for (Eigen::Index k = 0; k < act.cell_count(); ++k) {
    const double s = std::sqrt(mu(k));
    const double r = (y(k) - mu(k)) / s;
    const double dpsi = std::abs(r) <= c ? -0.5 * (y(k) + mu(k)) / s : 0.0;
    const double centred = huber_psi(r, c) - expected_psi(mu(k), c);
    g(k) = w(k) * s * (dpsi + 0.5 * centred - expected_psi_wh_dlogmu(mu(k), c));
  }
  return act.x.transpose() * g.asDiagonal() * act.x;
}

}  // namespace chainladder
