#include "chainladder/poisson_glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "chainladder/error.hpp"

namespace chainladder {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMaxEta = 700.0;

ActiveSet build_active(const DesignMatrix& design, const std::vector<bool>& param_active) {
  ActiveSet act;
  const Eigen::Index p = design.cols();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (param_active[static_cast<std::size_t>(j)]) act.params.push_back(j);
  }
  for (Eigen::Index k = 0; k < design.rows(); ++k) {
    bool ok = true;
    for (Eigen::Index j = 0; j < p && ok; ++j) {
      if (design.x(k, j) != 0.0 && !param_active[static_cast<std::size_t>(j)]) ok = false;
    }
    if (ok) act.cells.push_back(k);
  }
  act.x.resize(act.cell_count(), act.parameter_count());
  for (Eigen::Index r = 0; r < act.cell_count(); ++r) {
    for (Eigen::Index c = 0; c < act.parameter_count(); ++c) {
      act.x(r, c) = design.x(act.cells[static_cast<std::size_t>(r)], act.params[static_cast<std::size_t>(c)]);
    }
  }
  return act;
}

double quasi_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  return y.dot(eta) - eta.array().exp().sum();
}

// Fallback start from row and column means when no chain-ladder start exists.
Eigen::VectorXd mean_start(const ActiveSet& act, const Eigen::VectorXd& y) {
  const Eigen::Index p = act.parameter_count();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  const double overall = std::max(y.mean(), 1e-8);
  theta(0) = std::log(overall);
  for (Eigen::Index c = 1; c < p; ++c) {
    double sum = 0.0;
    double count = 0.0;
    for (Eigen::Index r = 0; r < act.cell_count(); ++r) {
      if (act.x(r, c) != 0.0) {
        sum += y(r);
        count += 1.0;
      }
    }
    const double m = count > 0.0 ? sum / count : overall;
    theta(c) = m > 0.0 ? std::log(m / overall) : 0.0;
  }
  return theta;
}

bool is_observed_triangle(const DesignMatrix& design) {
  if (static_cast<std::size_t>(design.rows()) != observed_count(design.n)) return false;
  return design.cells == observed_cells(design.n);
}

}  // namespace

// --- ActiveSet --------------------------------------------------------------

Eigen::VectorXd ActiveSet::gather_cells(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(cell_count());
  for (Eigen::Index r = 0; r < cell_count(); ++r) out(r) = full(cells[static_cast<std::size_t>(r)]);
  return out;
}

Eigen::VectorXd ActiveSet::gather_params(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd out(parameter_count());
  for (Eigen::Index c = 0; c < parameter_count(); ++c) out(c) = theta(params[static_cast<std::size_t>(c)]);
  return out;
}

Eigen::VectorXd ActiveSet::expand_params(const Eigen::VectorXd& reduced, Eigen::Index p) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(p, kNegInf);
  for (Eigen::Index c = 0; c < parameter_count(); ++c) out(params[static_cast<std::size_t>(c)]) = reduced(c);
  return out;
}

Eigen::VectorXd ActiveSet::expand_cells(const Eigen::VectorXd& reduced, Eigen::Index rows, double fill) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(rows, fill);
  for (Eigen::Index r = 0; r < cell_count(); ++r) out(cells[static_cast<std::size_t>(r)]) = reduced(r);
  return out;
}

ActiveSet active_set_from_data(const DesignMatrix& design, const Eigen::VectorXd& y) {
  const Eigen::Index p = design.cols();
  std::vector<bool> active(static_cast<std::size_t>(p), false);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < design.rows(); ++k) {
      if (design.x(k, j) != 0.0 && y(k) != 0.0) {
        active[static_cast<std::size_t>(j)] = true;
        break;
      }
    }
  }
  if (!active[0]) throw FitError("every observed amount is zero");
  // Row 1 and column 1 are the reference levels: their cells carry only the
  // intercept plus the other effect, so a structural zero there cannot be fitted.
  for (const bool reference_row : {true, false}) {
    bool all_zero = true;
    bool any = false;
    for (Eigen::Index k = 0; k < design.rows(); ++k) {
      const Cell c = design.cells[static_cast<std::size_t>(k)];
      if ((reference_row ? c.row : c.col) != 1) continue;
      any = true;
      if (y(k) != 0.0) all_zero = false;
    }
    if (any && all_zero) {
      throw FitError(reference_row ? "accident year 1 is structurally zero"
                                   : "development year 1 is structurally zero");
    }
  }
  return build_active(design, active);
}

ActiveSet active_set_from_theta(const DesignMatrix& design, const Eigen::VectorXd& theta) {
  std::vector<bool> active(static_cast<std::size_t>(design.cols()));
  for (Eigen::Index j = 0; j < design.cols(); ++j) active[static_cast<std::size_t>(j)] = std::isfinite(theta(j));
  return build_active(design, active);
}

// --- Chain-ladder start -----------------------------------------------------

std::optional<Eigen::VectorXd> chain_ladder_theta(const Eigen::VectorXd& y, int n) {
  // Cumulative amounts per row.
  std::vector<std::vector<double>> cum(static_cast<std::size_t>(n));
  std::size_t k = 0;
  for (int i = 1; i <= n; ++i) {
    double acc = 0.0;
    for (int j = 1; j <= n - i + 1; ++j) {
      acc += y(static_cast<Eigen::Index>(k++));
      cum[static_cast<std::size_t>(i - 1)].push_back(acc);
    }
  }
  std::vector<double> f(static_cast<std::size_t>(n + 1), 1.0);
  for (int j = 2; j <= n; ++j) {
    double num = 0.0;
    double den = 0.0;
    for (int i = 1; i <= n - j + 1; ++i) {
      num += cum[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
      den += cum[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 2)];
    }
    if (den == 0.0) return std::nullopt;
    f[static_cast<std::size_t>(j)] = num / den;
  }
  // Cumulative proportion developed by column j, and projected ultimates.
  std::vector<double> prop(static_cast<std::size_t>(n + 1), 0.0);
  for (int j = 1; j <= n; ++j) {
    double tail = 1.0;
    for (int m = j + 1; m <= n; ++m) tail *= f[static_cast<std::size_t>(m)];
    if (tail == 0.0 || !std::isfinite(tail)) return std::nullopt;
    prop[static_cast<std::size_t>(j)] = 1.0 / tail;
  }
  std::vector<double> ultimate(static_cast<std::size_t>(n + 1));
  for (int i = 1; i <= n; ++i) {
    const int last = n - i + 1;
    ultimate[static_cast<std::size_t>(i)] =
        cum[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(last - 1)] / prop[static_cast<std::size_t>(last)];
  }
  auto mu = [&](int i, int j) {
    return ultimate[static_cast<std::size_t>(i)] * (prop[static_cast<std::size_t>(j)] - prop[static_cast<std::size_t>(j - 1)]);
  };
  auto safe_log = [](double v) {
    if (v > 0.0) return std::log(v);
    if (v == 0.0) return kNegInf;
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double mu11 = mu(1, 1);
  if (!(mu11 > 0.0)) return std::nullopt;
  Eigen::VectorXd theta(parameter_count(n));
  theta(0) = std::log(mu11);
  for (int i = 2; i <= n; ++i) theta(row_parameter(i)) = safe_log(mu(i, 1) / mu11);
  for (int j = 2; j <= n; ++j) theta(col_parameter(n, j)) = safe_log(mu(1, j) / mu11);
  return theta;
}

// --- Fits -------------------------------------------------------------------

GlmFit fit_quasi(const Eigen::VectorXd& y_full, const DesignMatrix& design, const QuasiOptions& options) {
  if (y_full.size() != design.rows()) throw std::invalid_argument("response length does not match design");
  for (Eigen::Index k = 0; k < y_full.size(); ++k) {
    if (!std::isfinite(y_full(k))) throw FitError("non-finite response");
  }
  const ActiveSet act = active_set_from_data(design, y_full);
  const Eigen::VectorXd y = act.gather_cells(y_full);
  const Eigen::Index p = act.parameter_count();
  const Eigen::Index m = act.cell_count();
  if (m < p) throw FitError("fewer active cells than parameters");

  Eigen::VectorXd theta;
  if (options.start) {
    theta = act.gather_params(*options.start);
  } else if (is_observed_triangle(design)) {
    if (auto cl = chain_ladder_theta(y_full, design.n)) {
      theta = act.gather_params(*cl);
      if (!theta.allFinite()) {
        throw FitError("response admits no positive log-linear fit (negative chain-ladder increment)");
      }
    }
  }
  if (theta.size() != p || !theta.allFinite()) theta = mean_start(act, y);

  const IrlsControl& ctl = options.control;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  Eigen::VectorXd eta = act.x * theta;
  if (eta.maxCoeff() > kMaxEta) throw FitError("IRLS start overflows");
  double ll = quasi_loglik(y, eta);

  GlmFit fit;
  fit.n = design.n;
  for (int iter = 1; iter <= ctl.max_iterations; ++iter) {
    const Eigen::VectorXd mu = eta.array().exp();
    const Eigen::VectorXd sw = mu.array().sqrt();
    const Eigen::MatrixXd a = act.x.array().colwise() * sw.array();
    const Eigen::VectorXd rhs = ((y - mu).array() / sw.array()).matrix();
    qr.compute(a);
    if (qr.rank() < p) throw FitError("weighted design is rank deficient");
    const Eigen::VectorXd delta = qr.solve(rhs);

    double step = 1.0;
    Eigen::VectorXd next = theta + delta;
    Eigen::VectorXd next_eta = act.x * next;
    double next_ll = next_eta.maxCoeff() > kMaxEta ? -std::numeric_limits<double>::infinity()
                                                   : quasi_loglik(y, next_eta);
    for (int halving = 0; halving < 40 && !(next_ll >= ll - 1e-12 * std::abs(ll)); ++halving) {
      step *= 0.5;
      next = theta + step * delta;
      next_eta = act.x * next;
      next_ll = next_eta.maxCoeff() > kMaxEta ? -std::numeric_limits<double>::infinity()
                                              : quasi_loglik(y, next_eta);
    }
    if (!std::isfinite(next_ll)) throw FitError("IRLS diverged (fitted mean overflow)");

    const double change = std::abs(next_ll - ll) / std::max(1.0, std::abs(next_ll));
    const double step_norm = (step * delta).lpNorm<Eigen::Infinity>();
    theta = next;
    eta = next_eta;
    ll = next_ll;
    fit.iterations = iter;
    if (change < ctl.deviance_tol && step_norm < ctl.step_tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw FitError("IRLS did not converge in " + std::to_string(ctl.max_iterations) + " iterations");
  }

  const Eigen::VectorXd mu = eta.array().exp();
  fit.theta = act.expand_params(theta, design.cols());
  fit.mu = act.expand_cells(mu, design.rows(), 0.0);
  if (options.compute_hat) {
    const Eigen::MatrixXd a = act.x.array().colwise() * mu.array().sqrt();
    qr.compute(a);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, p);
    fit.hat_diag = act.expand_cells(q.rowwise().squaredNorm(), design.rows(), 0.0);
  }
  return fit;
}

GlmFit fit_poisson(const Triangle& triangle, const IrlsControl& control) {
  QuasiOptions options;
  options.control = control;
  options.compute_hat = true;
  return fit_quasi(triangle.as_vector(), design_matrix(triangle.n()), options);
}

// --- Deterministic chain-ladder ---------------------------------------------

DevFactors dev_factors(const Triangle& triangle) {
  const int n = triangle.n();
  const Triangle cum = cumulate(triangle);
  DevFactors out;
  out.n = n;
  for (int j = 2; j <= n; ++j) {
    double num = 0.0;
    double den = 0.0;
    for (int i = 1; i <= n - j + 1; ++i) {
      num += cum(i, j);
      den += cum(i, j - 1);
    }
    if (den == 0.0) throw FitError("development factor " + std::to_string(j) + " has a zero denominator");
    out.f.push_back(num / den);
  }
  return out;
}

FullSquare complete_square(const Triangle& triangle, const DevFactors& factors) {
  const int n = triangle.n();
  if (factors.n != n) throw std::invalid_argument("factor count does not match triangle");
  const Triangle cum = cumulate(triangle);
  FullSquare square(n, std::vector<double>(static_cast<std::size_t>(n * n), 0.0));
  for (int i = 1; i <= n; ++i) {
    const int last = n - i + 1;
    for (int j = 1; j <= last; ++j) square(i, j) = triangle(i, j);
    double prev = cum(i, last);
    for (int j = last + 1; j <= n; ++j) {
      const double next = prev * factors[j];
      square(i, j) = next - prev;
      prev = next;
    }
  }
  return square;
}

FullSquare complete_square(const Triangle& triangle, const GlmFit& fit) {
  const int n = triangle.n();
  FullSquare square(n, std::vector<double>(static_cast<std::size_t>(n * n), 0.0));
  for (const Cell c : observed_cells(n)) square(c.row, c.col) = triangle.at(c);
  for (const Cell c : future_cells(n)) square(c.row, c.col) = std::exp(linear_predictor(fit.theta, n, c));
  return square;
}

Eigen::MatrixXd chain_ladder_completion(const Eigen::MatrixXd& increments, const std::vector<int>& last) {
  const auto n = static_cast<int>(increments.rows());
  if (increments.cols() != n || static_cast<int>(last.size()) != n) throw std::invalid_argument("staircase shape mismatch");
  for (int i = 0; i < n; ++i) {
    if (last[static_cast<std::size_t>(i)] < 1 || last[static_cast<std::size_t>(i)] > n ||
        (i > 0 && last[static_cast<std::size_t>(i)] > last[static_cast<std::size_t>(i - 1)])) {
      throw std::invalid_argument("staircase rows must be non-increasing");
    }
  }
  Eigen::MatrixXd cum = increments;
  for (int j = 1; j < n; ++j) cum.col(j) += cum.col(j - 1);
  Eigen::MatrixXd out = increments;
  for (int j = 1; j < n; ++j) {
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < n && last[static_cast<std::size_t>(i)] > j; ++i) {
      num += cum(i, j);
      den += cum(i, j - 1);
    }
    if (den == 0.0) throw FitError("development factor " + std::to_string(j + 1) + " has a zero denominator");
    const double f = num / den;
    for (int i = 0; i < n; ++i) {
      if (last[static_cast<std::size_t>(i)] > j) continue;
      cum(i, j) = cum(i, j - 1) * f;
      out(i, j) = cum(i, j) - cum(i, j - 1);
    }
  }
  return out;
}

Eigen::MatrixXd triangle_matrix(const Eigen::VectorXd& cells, int n) {
  if (cells.size() != static_cast<Eigen::Index>(observed_count(n))) throw std::invalid_argument("cell count does not match n");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n - i; ++j) m(i, j) = cells(k++);
  }
  return m;
}

double fitted_reserve(const Eigen::VectorXd& theta, int n) {
  double total = 0.0;
  for (const Cell c : future_cells(n)) total += std::exp(linear_predictor(theta, n, c));
  return total;
}

std::vector<double> fitted_reserve_by_year(const Eigen::VectorXd& theta, int n) {
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (const Cell c : future_cells(n)) {
    out[static_cast<std::size_t>(c.row - 1)] += std::exp(linear_predictor(theta, n, c));
  }
  return out;
}

Eigen::MatrixXd hat_matrix(const GlmFit& fit, const DesignMatrix& design) {
  const ActiveSet act = active_set_from_theta(design, fit.theta);
  const Eigen::VectorXd mu = act.gather_cells(fit.mu);
  const Eigen::MatrixXd a = act.x.array().colwise() * mu.array().sqrt();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < act.parameter_count()) throw FitError("X'WX is singular");
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(act.cell_count(), act.parameter_count());
  const Eigen::MatrixXd h_active = q * q.transpose();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(design.rows(), design.rows());
  for (Eigen::Index r = 0; r < act.cell_count(); ++r) {
    for (Eigen::Index s = 0; s < act.cell_count(); ++s) {
      h(act.cells[static_cast<std::size_t>(r)], act.cells[static_cast<std::size_t>(s)]) = h_active(r, s);
    }
  }
  return h;
}

}  // namespace chainladder
