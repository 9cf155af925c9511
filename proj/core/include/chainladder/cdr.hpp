/**
 * @file cdr.hpp
 * @brief One-year claims development result by bootstrap.
 *
 * Each replicate's fitted lower triangle supplies the next calendar
 * diagonal i + j = n + 2. It is appended to the replicate's pseudo-history,
 * the extended history is refitted with the classical chain-ladder, and
 * CDR = R - R_ext where R_ext sums the refitted cells beyond that diagonal.
 */
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "chainladder/bootstrap.hpp"

namespace chainladder {

struct CdrResult {
  std::vector<double> cdr;       ///< aggregate CDR per successful replicate
  std::vector<double> reserves;  ///< replicate reserve R
  Eigen::MatrixXd by_year;       ///< per accident year CDR, replicates x n
  Method method = Method::tcl;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::size_t failed = 0;
};

/// Cells (2, n), (3, n - 1), ..., (n, 2).
std::vector<Cell> next_diagonal(int n);

struct CdrReplicate {
  double reserve = 0.0;
  double reserve_ext = 0.0;
  Eigen::VectorXd by_year;       ///< R_i - R_ext,i
};

/// Extends the replicate's pseudo-history by its fitted next diagonal and
/// refits. Throws FitError when the refit fails.
CdrReplicate cdr_replicate(const Replicate& rep);

/// Method must be TCL or FRB.
CdrResult bootstrap_cdr(const Triangle& triangle, const BootstrapOptions& options);

}  // namespace chainladder
