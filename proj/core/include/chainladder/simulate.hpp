/**
 * @file simulate.hpp
 * @brief Synthetic run-off data and bootstrap coverage studies.
 *
 * Expected amounts follow
 *
 *     lambda(i, j) = lambda0 (1 + (i - 1) eta2) eta1^(2 (j - 1) / n)
 *
 * so eta1 is the reduction at development year n/2 + 1 and eta2 the yearly
 * growth of accident years. Three generators share it:
 *
 *  - benchmark: Y(i, j) ~ Poisson(lambda(i, j)).
 *  - schiegl:   Poisson(lambda(i, j)) claims of Gamma(r, 1) severity per cell.
 *  - kaishev:   Poisson(lambda0 (1 + (i - 1) eta2)) claims per accident
 *               year, each of Gamma(r, 1) severity and development year
 *               min(n, floor(n u) + 1) with u ~ Beta(beta_a, beta_b).
 *
 * For the collective models lambda0 is a claim count, not an amount.
 */
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "chainladder/bootstrap.hpp"
#include "chainladder/triangle.hpp"

namespace chainladder {

enum class SimModel { benchmark, schiegl, kaishev };

std::string_view to_string(SimModel model);

/// Parses "benchmark", "schiegl" or "kaishev". Throws ParseError.
SimModel parse_sim_model(std::string_view name);

/// Multiplies observed cell (row, col) by factor.
struct Contamination {
  int row = 0;
  int col = 0;
  double factor = 1.0;

  friend bool operator==(const Contamination&, const Contamination&) = default;
};

struct SimConfig {
  SimModel model = SimModel::benchmark;
  int n = 10;
  double lambda0 = 10000.0;
  double eta1 = 0.3;
  double eta2 = 0.05;
  double r = 2000.0;           ///< Gamma severity shape (and mean)
  double beta_a = 1.0;
  double beta_b = 1.6;
  std::vector<Contamination> contamination;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on an out-of-range field.
  void validate() const;
};

/// Reference-scale defaults for @p model. The collective models use the claim
/// count lambda0 = 10000 / r so that a first cell is worth 10000 on average.
SimConfig default_config(SimModel model);

/// lambda(i, j) above.
double expected_count(const SimConfig& cfg, int row, int col);

/// Development year of an allocation draw u in [0, 1].
int allocation_column(int n, double u);

FullSquare gen_benchmark(const SimConfig& cfg, std::mt19937_64& rng);
FullSquare gen_schiegl(const SimConfig& cfg, std::mt19937_64& rng);
FullSquare gen_kaishev(const SimConfig& cfg, std::mt19937_64& rng);

/// Dispatches on cfg.model.
FullSquare generate(const SimConfig& cfg, std::mt19937_64& rng);

/// Scales observed cells. Throws std::invalid_argument for a cell outside
/// the observed triangle.
FullSquare contaminate(FullSquare square, const std::vector<Contamination>& spec);

/// "none" or "2:3x5;3:2x5".
std::string contamination_label(const std::vector<Contamination>& spec);

/// Parses contamination_label output. Throws ParseError.
std::vector<Contamination> parse_contamination(std::string_view text);

/// Contamination settings used in the coverage study.
std::vector<Contamination> contamination_setting(int setting);

struct CoverageOptions {
  std::vector<Method> methods{Method::tcl};
  std::size_t replicates = 1000;
  std::size_t datasets = 500;
  std::vector<double> levels{0.75, 0.90, 0.95, 0.995};
  std::uint64_t seed = 0;
  BootstrapOptions bootstrap{};   ///< method, replicates, seed and threads are overridden
  int threads = 0;                ///< dataset-level workers
};

struct CoverageRow {
  SimModel model = SimModel::benchmark;
  std::string contamination;
  Method method = Method::tcl;
  double level = 0.0;
  double coverage_pct = 0.0;
  std::size_t n_datasets = 0;     ///< datasets whose bootstrap succeeded
  std::size_t replicates = 0;
  std::size_t failed_datasets = 0;
};

struct CoverageTable {
  std::vector<CoverageRow> rows;  ///< method-major, then level
};

/// Simulates datasets d = 0..datasets-1 from stream_rng(seed, d), contaminates
/// the observed part, bootstraps each method and records whether the true
/// lower-triangle total lies at or below each quantile. Datasets whose
/// bootstrap throws are counted as failed for that method.
CoverageTable coverage_study(const SimConfig& cfg, const CoverageOptions& options);

/// model,contamination,method,level,coverage_pct,n_datasets,B
std::string to_csv(const CoverageTable& table);

}  // namespace chainladder
