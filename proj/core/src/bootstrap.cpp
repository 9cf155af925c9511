#include "chainladder/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "chainladder/error.hpp"

namespace chainladder {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::tcl: return "tcl";
    case Method::cb: return "cb";
    case Method::wb: return "wb";
    case Method::ifb: return "ifb";
    case Method::frb: return "frb";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::tcl, Method::cb, Method::wb, Method::ifb, Method::frb}) {
    if (name == to_string(m)) return m;
  }
  throw ParseError("unknown bootstrap method '" + std::string(name) + "'");
}

// --- Primitives -------------------------------------------------------------

Eigen::VectorXd resample_residuals(const ResidualSet& rs, const std::optional<Eigen::VectorXd>& probs,
                                   std::mt19937_64& rng) {
  const std::vector<Eigen::Index> pool = rs.pool();
  if (pool.empty()) throw std::invalid_argument("empty resampling pool");
  Eigen::VectorXd out(rs.values.size());
  if (probs) {
    if (probs->size() != rs.values.size()) throw std::invalid_argument("probability vector length mismatch");
    std::vector<double> p;
    p.reserve(pool.size());
    for (Eigen::Index k : pool) p.push_back((*probs)(k));
    std::discrete_distribution<std::size_t> pick(p.begin(), p.end());
    for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = rs.values(pool[pick(rng)]);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = rs.values(pool[pick(rng)]);
  }
  return out;
}

Eigen::VectorXd pseudo_history(const Eigen::VectorXd& r, const Eigen::VectorXd& mu) {
  if (r.size() != mu.size()) throw std::invalid_argument("residual and mean lengths differ");
  return r.cwiseProduct(mu.cwiseSqrt()) + mu;
}

ResidualSet winsorize(const ResidualSet& rs, double fraction) {
  if (!(fraction >= 0.0 && fraction < 0.5)) throw std::invalid_argument("winsor fraction must lie in [0, 0.5)");
  const std::vector<Eigen::Index> pool = rs.pool();
  ResidualSet out = rs;
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool.size()) + 1e-9));
  if (k == 0 || pool.empty()) return out;
  std::vector<double> sorted;
  sorted.reserve(pool.size());
  for (Eigen::Index i : pool) sorted.push_back(rs.values(i));
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[k];
  const double hi = sorted[sorted.size() - 1 - k];
  for (Eigen::Index i : pool) out.values(i) = std::clamp(rs.values(i), lo, hi);
  return out;
}

double ifb_weight(double x, double cutoff, double d, double gamma) {
  if (x <= cutoff) return 1.0;
  const double u = x - cutoff;
  return std::pow(1.0 + u * u / (gamma * d * d), -(gamma + 1.0) / 2.0);
}

IfbWeights ifb_weights(const Triangle& triangle, const RobustFit& fit, const std::vector<bool>& excluded,
                       const IfbParams& params) {
  const Eigen::VectorXd y = triangle.as_vector();
  if (fit.mu.size() != y.size() || excluded.size() != static_cast<std::size_t>(y.size())) {
    throw std::invalid_argument("fit does not match triangle");
  }
  IfbWeights out;
  out.d = params.d;
  out.gamma = params.gamma;
  out.resif = Eigen::VectorXd::Zero(y.size());
  std::vector<double> pool_values;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (fit.mu(k) > 0.0) out.resif(k) = std::abs(y(k) - fit.mu(k)) / std::sqrt(fit.mu(k));
    if (!excluded[static_cast<std::size_t>(k)]) pool_values.push_back(out.resif(k));
  }
  if (pool_values.empty()) throw std::invalid_argument("empty resampling pool");
  out.cutoff = quantile(pool_values, params.quantile_level);
  out.probs = Eigen::VectorXd::Zero(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (!excluded[static_cast<std::size_t>(k)]) out.probs(k) = ifb_weight(out.resif(k), out.cutoff, params.d, params.gamma);
  }
  out.probs /= out.probs.sum();
  return out;
}

// --- FRB --------------------------------------------------------------------

Eigen::VectorXd FrbState::replicate_theta(const Eigen::VectorXd& y_full) const {
  const Eigen::VectorXd y = act.gather_cells(y_full);
  Eigen::VectorXd d(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double s = std::sqrt(mu(k));
    d(k) = huber_psi((y(k) - mu(k)) / s, c) * w(k) * s;
  }
  const Eigen::VectorXd u = act.x.transpose() * d;
  const Eigen::VectorXd theta = act.gather_params(theta_hat) - lu.solve(u);
  return act.expand_params(theta, theta_hat.size());
}

FrbState frb_prepare(const Triangle& triangle, const RobustFit& fit) {
  const DesignMatrix design = design_matrix(triangle.n());
  FrbState st;
  st.act = active_set_from_theta(design, fit.theta);
  st.theta_hat = fit.theta;
  st.mu = st.act.gather_cells(fit.mu);
  st.w = st.act.gather_cells(fit.x_weights);
  st.c = fit.c;
  st.grad = estimating_gradient(st.act, st.act.gather_params(fit.theta), st.act.gather_cells(triangle.as_vector()),
                                st.w, fit.c);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(st.grad);
  const Eigen::VectorXd sv = svd.singularValues();
  st.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(st.condition < 1e12)) {
    throw FitError("robust estimating function gradient is singular (condition " + std::to_string(st.condition) + ")");
  }
  st.lu.compute(st.grad);
  return st;
}

// --- Engine -----------------------------------------------------------------

ReplicateEngine::ReplicateEngine(const Triangle& triangle, const BootstrapOptions& options)
    : triangle_(triangle), options_(options), design_(design_matrix(triangle.n())) {
  if (options.replicates < 1) throw std::invalid_argument("at least one replicate is required");
  if (options.method == Method::tcl) {
    const GlmFit fit = fit_poisson(triangle);
    theta_ = fit.theta;
    mu_ = fit.mu;
    residuals_ = fit_residuals(triangle, fit, options.variant);
    return;
  }
  RobustOptions ropts;
  ropts.c = options.huber_c;
  const RobustFit fit = fit_robust(triangle, ropts);
  theta_ = fit.theta;
  mu_ = fit.mu;
  residuals_ = fit_residuals(triangle, fit, options.variant);
  switch (options.method) {
    case Method::wb: residuals_ = winsorize(residuals_, options.winsor_fraction); break;
    case Method::ifb: probs_ = ifb_weights(triangle, fit, residuals_.excluded, options.ifb).probs; break;
    case Method::frb: frb_ = frb_prepare(triangle, fit); break;
    default: break;
  }
}

void ReplicateEngine::refit(Replicate& rep) const {
  const int n = triangle_.n();
  switch (options_.method) {
    case Method::tcl:
    case Method::ifb: {
      std::vector<int> last(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) last[static_cast<std::size_t>(i)] = n - i;
      rep.square = chain_ladder_completion(triangle_matrix(rep.pseudo, n), last);
      return;
    }
    case Method::cb:
    case Method::wb: {
      RobustOptions ropts;
      ropts.c = options_.huber_c;
      ropts.start = theta_;
      rep.theta = fit_robust(rep.pseudo, design_, ropts).theta;
      break;
    }
    case Method::frb: rep.theta = frb_->replicate_theta(rep.pseudo); break;
  }
  rep.square = triangle_matrix(rep.pseudo, n);
  for (const Cell c : future_cells(n)) rep.square(c.row - 1, c.col - 1) = std::exp(linear_predictor(rep.theta, n, c));
}

double lower_sum(const Eigen::MatrixXd& square) {
  const auto n = square.rows();
  double total = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = n - i; j < n; ++j) total += square(i, j);
  }
  return total;
}

double Replicate::reserve() const { return lower_sum(square); }

std::optional<Replicate> ReplicateEngine::draw(std::uint64_t index) const {
  std::mt19937_64 rng = stream_rng(options_.seed, index);
  Replicate rep;
  rep.pseudo = pseudo_history(resample_residuals(residuals_, probs_, rng), mu_);
  try {
    refit(rep);
  } catch (const FitError&) {
    return std::nullopt;
  }
  return rep;
}

BootstrapResult run_bootstrap(const ReplicateEngine& engine) {
  const BootstrapOptions& opts = engine.options();
  auto [reserves, failed] = run_replicates<double>(opts.replicates, opts, [&](std::uint64_t b) -> std::optional<double> {
    const auto rep = engine.draw(b);
    if (!rep) return std::nullopt;
    const double r = rep->reserve();
    if (!std::isfinite(r)) return std::nullopt;
    return r;
  });
  BootstrapResult out;
  out.reserves = std::move(reserves);
  out.method = opts.method;
  out.variant = opts.variant;
  out.replicates = opts.replicates;
  out.seed = opts.seed;
  out.failed = failed;
  return out;
}

BootstrapResult run_bootstrap(const Triangle& triangle, const BootstrapOptions& options) {
  return run_bootstrap(ReplicateEngine(triangle, options));
}

BootstrapResult bootstrap_classical(const Triangle& triangle, bool robust, BootstrapOptions options) {
  options.method = robust ? Method::cb : Method::tcl;
  return run_bootstrap(triangle, options);
}

BootstrapResult bootstrap_winsorized(const Triangle& triangle, BootstrapOptions options) {
  options.method = Method::wb;
  return run_bootstrap(triangle, options);
}

BootstrapResult bootstrap_ifb(const Triangle& triangle, BootstrapOptions options) {
  options.method = Method::ifb;
  return run_bootstrap(triangle, options);
}

BootstrapResult bootstrap_frb(const Triangle& triangle, BootstrapOptions options) {
  options.method = Method::frb;
  return run_bootstrap(triangle, options);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

}  // namespace chainladder
