#include "chainladder/cdr.hpp"

#include <cmath>
#include <stdexcept>

#include "chainladder/error.hpp"

namespace chainladder {

std::vector<Cell> next_diagonal(int n) {
  std::vector<Cell> out;
  for (int i = 2; i <= n; ++i) out.push_back({i, n + 2 - i});
  return out;
}

CdrReplicate cdr_replicate(const Replicate& rep) {
  const auto n = static_cast<int>(rep.square.rows());
  Eigen::MatrixXd ext = triangle_matrix(rep.pseudo, n);
  std::vector<int> last(static_cast<std::size_t>(n));
  last[0] = n;
  for (const Cell c : next_diagonal(n)) {
    ext(c.row - 1, c.col - 1) = rep.square(c.row - 1, c.col - 1);
    last[static_cast<std::size_t>(c.row - 1)] = c.col;
  }
  const Eigen::MatrixXd refit = chain_ladder_completion(ext, last);

  CdrReplicate out;
  out.by_year = Eigen::VectorXd::Zero(n);
  for (const Cell c : future_cells(n)) {
    const double before = rep.square(c.row - 1, c.col - 1);
    out.reserve += before;
    out.by_year(c.row - 1) += before;
    if (c.row + c.col > n + 2) {
      const double after = refit(c.row - 1, c.col - 1);
      out.reserve_ext += after;
      out.by_year(c.row - 1) -= after;
    }
  }
  return out;
}

CdrResult bootstrap_cdr(const Triangle& triangle, const BootstrapOptions& options) {
  if (options.method != Method::tcl && options.method != Method::frb) {
    throw std::invalid_argument("CDR bootstrap supports the tcl and frb engines");
  }
  const int n = triangle.n();
  const ReplicateEngine engine(triangle, options);
  auto [reps, failed] = run_replicates<CdrReplicate>(
      options.replicates, options, [&](std::uint64_t b) -> std::optional<CdrReplicate> {
        const auto rep = engine.draw(b);
        if (!rep) return std::nullopt;
        try {
          CdrReplicate out = cdr_replicate(*rep);
          if (!std::isfinite(out.reserve) || !std::isfinite(out.reserve_ext)) return std::nullopt;
          return out;
        } catch (const FitError&) {
          return std::nullopt;
        }
      });
  CdrResult out;
  out.method = options.method;
  out.replicates = options.replicates;
  out.seed = options.seed;
  out.failed = failed;
  out.by_year.resize(static_cast<Eigen::Index>(reps.size()), n);
  for (std::size_t b = 0; b < reps.size(); ++b) {
    out.cdr.push_back(reps[b].reserve - reps[b].reserve_ext);
    out.reserves.push_back(reps[b].reserve);
    out.by_year.row(static_cast<Eigen::Index>(b)) = reps[b].by_year.transpose();
  }
  return out;
}

}  // namespace chainladder
