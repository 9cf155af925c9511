#include "chainladder/residuals.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "chainladder/error.hpp"

namespace chainladder {

namespace {

int triangle_size(Eigen::Index cells) {
  const int n = static_cast<int>(std::lround((std::sqrt(8.0 * static_cast<double>(cells) + 1.0) - 1.0) / 2.0));
  if (n < 1 || static_cast<Eigen::Index>(observed_count(n)) != cells) {
    throw std::invalid_argument("residual vector length " + std::to_string(cells) + " is not triangular");
  }
  return n;
}

void check_length(const ResidualSet& rs, Eigen::Index len, const char* what) {
  if (len != rs.values.size()) throw std::invalid_argument(std::string(what) + " length does not match residuals");
}

}  // namespace

std::string_view to_string(ResidualVariant variant) {
  switch (variant) {
    case ResidualVariant::raw: return "raw";
    case ResidualVariant::england: return "england";
    case ResidualVariant::pinheiro: return "pinheiro";
    case ResidualVariant::cordeiro: return "cordeiro";
  }
  return "?";
}

ResidualVariant parse_residual_variant(std::string_view name) {
  for (auto v : {ResidualVariant::raw, ResidualVariant::england, ResidualVariant::pinheiro, ResidualVariant::cordeiro}) {
    if (name == to_string(v)) return v;
  }
  throw ParseError("unknown residual variant '" + std::string(name) + "'");
}

std::vector<Eigen::Index> ResidualSet::pool() const {
  std::vector<Eigen::Index> out;
  for (std::size_t k = 0; k < excluded.size(); ++k) {
    if (!excluded[k]) out.push_back(static_cast<Eigen::Index>(k));
  }
  return out;
}

ResidualSet pearson(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  if (y.size() != mu.size()) throw std::invalid_argument("y and mu differ in length");
  const int n = triangle_size(y.size());
  ResidualSet rs;
  rs.values.resize(y.size());
  rs.excluded.assign(static_cast<std::size_t>(y.size()), false);
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (mu(k) == 0.0 && y(k) == 0.0) {
      rs.values(k) = 0.0;
      rs.excluded[ku] = true;
      continue;
    }
    if (!(mu(k) > 0.0)) throw std::invalid_argument("Pearson residual needs a positive mean");
    rs.values(k) = (y(k) - mu(k)) / std::sqrt(mu(k));
    rs.excluded[ku] = is_corner(n, cell_at(n, ku));
  }
  return rs;
}

ResidualSet adjust_england(const ResidualSet& rs, Eigen::Index n_obs, Eigen::Index n_params) {
  if (n_obs <= n_params) throw std::invalid_argument("England adjustment needs N > p");
  ResidualSet out = rs;
  out.values *= std::sqrt(static_cast<double>(n_obs) / static_cast<double>(n_obs - n_params));
  out.variant = ResidualVariant::england;
  return out;
}

ResidualSet adjust_pinheiro(const ResidualSet& rs, const Eigen::VectorXd& hat_diag) {
  check_length(rs, hat_diag.size(), "hat diagonal");
  ResidualSet out = rs;
  for (Eigen::Index k = 0; k < hat_diag.size(); ++k) {
    if (rs.excluded[static_cast<std::size_t>(k)]) {
      out.values(k) = 0.0;
      continue;
    }
    if (!(hat_diag(k) < 1.0)) throw std::invalid_argument("leverage 1 on a resampled cell");
    out.values(k) = rs.values(k) / std::sqrt(1.0 - hat_diag(k));
  }
  out.variant = ResidualVariant::pinheiro;
  return out;
}

Eigen::VectorXd cordeiro_mean(const Eigen::MatrixXd& hat, const Eigen::VectorXd& mu) {
  if (hat.rows() != mu.size() || hat.cols() != mu.size()) throw std::invalid_argument("hat matrix shape mismatch");
  Eigen::VectorXd jz(mu.size());
  for (Eigen::Index k = 0; k < mu.size(); ++k) jz(k) = mu(k) > 0.0 ? hat(k, k) / std::sqrt(mu(k)) : 0.0;
  return -0.5 * (jz - hat * jz);
}

ResidualSet adjust_cordeiro(const ResidualSet& rs, const Eigen::MatrixXd& hat, const Eigen::VectorXd& mu) {
  check_length(rs, mu.size(), "mean");
  const Eigen::VectorXd bias = cordeiro_mean(hat, mu);
  ResidualSet out = rs;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    if (rs.excluded[static_cast<std::size_t>(k)]) {
      out.values(k) = 0.0;
      continue;
    }
    const double var = 1.0 - hat(k, k);
    if (!(var > 0.0)) throw std::invalid_argument("non-positive residual variance on a resampled cell");
    out.values(k) = (rs.values(k) - bias(k)) / std::sqrt(var);
  }
  out.variant = ResidualVariant::cordeiro;
  return out;
}

namespace {

ResidualSet adjust(const ResidualSet& raw, ResidualVariant variant, const ActiveSet& act, const Eigen::VectorXd& mu,
                   const auto& hat) {
  switch (variant) {
    case ResidualVariant::raw: return raw;
    case ResidualVariant::england: return adjust_england(raw, act.cell_count(), act.parameter_count());
    case ResidualVariant::pinheiro: return adjust_pinheiro(raw, hat().diagonal());
    case ResidualVariant::cordeiro: return adjust_cordeiro(raw, hat(), mu);
  }
  return raw;
}

}  // namespace

ResidualSet fit_residuals(const Triangle& triangle, const GlmFit& fit, ResidualVariant variant) {
  const DesignMatrix d = design_matrix(triangle.n());
  const ResidualSet raw = pearson(triangle.as_vector(), fit.mu);
  return adjust(raw, variant, active_set_from_theta(d, fit.theta), fit.mu, [&] { return hat_matrix(fit, d); });
}

ResidualSet fit_residuals(const Triangle& triangle, const RobustFit& fit, ResidualVariant variant) {
  const DesignMatrix d = design_matrix(triangle.n());
  const ResidualSet raw = pearson(triangle.as_vector(), fit.mu);
  const auto hat = [&] {
    const Eigen::VectorXd s = fit.mu.array().sqrt();
    const Eigen::VectorXd inv = s.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 0.0; });
    return Eigen::MatrixXd(s.asDiagonal() * robust_hat_matrix(fit, d) * inv.asDiagonal());
  };
  return adjust(raw, variant, active_set_from_theta(d, fit.theta), fit.mu, hat);
}

}  // namespace chainladder
