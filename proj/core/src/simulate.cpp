#include "chainladder/simulate.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <boost/random/beta_distribution.hpp>

#include "chainladder/error.hpp"
#include "chainladder/parallel.hpp"

namespace chainladder {

std::string_view to_string(SimModel model) {
  switch (model) {
    case SimModel::benchmark: return "benchmark";
    case SimModel::schiegl: return "schiegl";
    case SimModel::kaishev: return "kaishev";
  }
  return "?";
}

SimModel parse_sim_model(std::string_view name) {
  for (auto m : {SimModel::benchmark, SimModel::schiegl, SimModel::kaishev}) {
    if (name == to_string(m)) return m;
  }
  throw ParseError("unknown simulation model '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (n < 2) throw std::invalid_argument("n must be at least 2");
  if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");
  if (!(eta1 > 0.0 && eta1 < 1.0)) throw std::invalid_argument("eta1 must lie in (0, 1)");
  if (!(eta2 >= 0.0)) throw std::invalid_argument("eta2 must be non-negative");
  if (!(r > 0.0)) throw std::invalid_argument("severity mean r must be positive");
  if (!(beta_a > 0.0 && beta_b > 0.0)) throw std::invalid_argument("Beta shapes must be positive");
  for (const auto& c : contamination) {
    if (c.row < 1 || c.col < 1 || c.row + c.col > n + 1) {
      throw std::invalid_argument("contaminated cell (" + std::to_string(c.row) + ", " + std::to_string(c.col) +
                                  ") is not observed");
    }
    if (!(c.factor >= 0.0) || !std::isfinite(c.factor)) throw std::invalid_argument("contamination factor must be finite and non-negative");
  }
}

SimConfig default_config(SimModel model) {
  SimConfig cfg;
  cfg.model = model;
  if (model != SimModel::benchmark) cfg.lambda0 = 10000.0 / cfg.r;
  return cfg;
}

double expected_count(const SimConfig& cfg, int row, int col) {
  return cfg.lambda0 * (1.0 + (row - 1) * cfg.eta2) *
         std::exp(2.0 * (col - 1) / static_cast<double>(cfg.n) * std::log(cfg.eta1));
}

int allocation_column(int n, double u) {
  return std::min(n, static_cast<int>(std::floor(n * u)) + 1);
}

namespace {

FullSquare empty_square(int n) {
  return FullSquare(n, std::vector<double>(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0));
}

// Sum of k Gamma(shape, 1) draws, itself Gamma(k shape, 1).
double gamma_sum(long k, double shape, std::mt19937_64& rng) {
  if (k == 0) return 0.0;
  std::gamma_distribution<double> g(static_cast<double>(k) * shape, 1.0);
  return g(rng);
}

}  // namespace

FullSquare gen_benchmark(const SimConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  FullSquare sq = empty_square(cfg.n);
  for (int i = 1; i <= cfg.n; ++i) {
    for (int j = 1; j <= cfg.n; ++j) {
      std::poisson_distribution<long> pois(expected_count(cfg, i, j));
      sq(i, j) = static_cast<double>(pois(rng));
    }
  }
  return sq;
}

FullSquare gen_schiegl(const SimConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  FullSquare sq = empty_square(cfg.n);
  for (int i = 1; i <= cfg.n; ++i) {
    for (int j = 1; j <= cfg.n; ++j) {
      std::poisson_distribution<long> pois(expected_count(cfg, i, j));
      sq(i, j) = gamma_sum(pois(rng), cfg.r, rng);
    }
  }
  return sq;
}

FullSquare gen_kaishev(const SimConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  FullSquare sq = empty_square(cfg.n);
  std::gamma_distribution<double> severity(cfg.r, 1.0);
  boost::random::beta_distribution<double> alloc(cfg.beta_a, cfg.beta_b);
  for (int i = 1; i <= cfg.n; ++i) {
    std::poisson_distribution<long> pois(cfg.lambda0 * (1.0 + (i - 1) * cfg.eta2));
    const long claims = pois(rng);
    for (long k = 0; k < claims; ++k) {
      const double z = severity(rng);
      sq(i, allocation_column(cfg.n, alloc(rng))) += z;
    }
  }
  return sq;
}

FullSquare generate(const SimConfig& cfg, std::mt19937_64& rng) {
  switch (cfg.model) {
    case SimModel::benchmark: return gen_benchmark(cfg, rng);
    case SimModel::schiegl: return gen_schiegl(cfg, rng);
    case SimModel::kaishev: return gen_kaishev(cfg, rng);
  }
  throw std::invalid_argument("unknown simulation model");
}

FullSquare contaminate(FullSquare square, const std::vector<Contamination>& spec) {
  for (const auto& c : spec) {
    if (c.row < 1 || c.col < 1 || c.row + c.col > square.n() + 1) {
      throw std::invalid_argument("contaminated cell (" + std::to_string(c.row) + ", " + std::to_string(c.col) +
                                  ") is not observed");
    }
    square(c.row, c.col) *= c.factor;
  }
  return square;
}

std::string contamination_label(const std::vector<Contamination>& spec) {
  if (spec.empty()) return "none";
  std::string out;
  for (const auto& c : spec) {
    if (!out.empty()) out += ';';
    out += std::to_string(c.row) + ':' + std::to_string(c.col) + 'x' + format_double(c.factor);
  }
  return out;
}

std::vector<Contamination> parse_contamination(std::string_view text) {
  std::vector<Contamination> out;
  if (text.empty() || text == "none") return out;
  std::istringstream in{std::string(text)};
  std::string item;
  while (std::getline(in, item, ';')) {
    Contamination c;
    char colon = 0;
    char times = 0;
    std::istringstream one(item);
    if (!(one >> c.row >> colon >> c.col >> times >> c.factor) || colon != ':' || times != 'x' || !one.eof()) {
      throw ParseError("bad contamination entry '" + item + "', expected ROW:COLxFACTOR");
    }
    out.push_back(c);
  }
  return out;
}

std::vector<Contamination> contamination_setting(int setting) {
  switch (setting) {
    case 0: return {};
    case 1: return {{2, 3, 5.0}, {3, 2, 5.0}};
    case 2: return {{2, 3, 2.5}, {4, 1, 2.5}};
  }
  throw std::invalid_argument("contamination setting must be 0, 1 or 2");
}

// --- Coverage ---------------------------------------------------------------

CoverageTable coverage_study(const SimConfig& cfg, const CoverageOptions& options) {
  cfg.validate();
  for (double l : options.levels) {
    if (!(l > 0.0 && l < 1.0)) throw std::invalid_argument("coverage levels must lie in (0, 1)");
  }
  if (options.datasets == 0) throw std::invalid_argument("at least one dataset is required");
  const std::size_t n_methods = options.methods.size();
  const std::size_t n_levels = options.levels.size();

  // hits[d][m] holds one indicator per level, empty when the bootstrap failed.
  std::vector<std::vector<std::optional<std::vector<bool>>>> hits(options.datasets,
                                                                 std::vector<std::optional<std::vector<bool>>>(n_methods));
  parallel_for(0, options.datasets, options.threads, [&](std::size_t d) {
    std::mt19937_64 rng = stream_rng(options.seed, 2 * d);
    const FullSquare square = contaminate(generate(cfg, rng), cfg.contamination);
    const double truth = true_reserve(square);
    std::optional<Triangle> tri;
    try {
      tri.emplace(square.upper());
    } catch (const std::invalid_argument&) {
      return;
    }
    const std::uint64_t boot_seed = stream_rng(options.seed, 2 * d + 1)();
    for (std::size_t m = 0; m < n_methods; ++m) {
      BootstrapOptions bo = options.bootstrap;
      bo.method = options.methods[m];
      bo.replicates = options.replicates;
      bo.seed = boot_seed;
      bo.threads = 1;
      try {
        const BootstrapResult res = run_bootstrap(*tri, bo);
        std::vector<bool> row(n_levels);
        for (std::size_t l = 0; l < n_levels; ++l) row[l] = truth <= quantile(res.reserves, options.levels[l]);
        hits[d][m] = std::move(row);
      } catch (const FitError&) {
      } catch (const BootstrapError&) {
      } catch (const std::invalid_argument&) {
      }
    }
  });

  CoverageTable table;
  const std::string label = contamination_label(cfg.contamination);
  for (std::size_t m = 0; m < n_methods; ++m) {
    for (std::size_t l = 0; l < n_levels; ++l) {
      CoverageRow row;
      row.model = cfg.model;
      row.contamination = label;
      row.method = options.methods[m];
      row.level = options.levels[l];
      row.replicates = options.replicates;
      std::size_t covered = 0;
      for (std::size_t d = 0; d < options.datasets; ++d) {
        if (!hits[d][m]) {
          ++row.failed_datasets;
          continue;
        }
        ++row.n_datasets;
        if ((*hits[d][m])[l]) ++covered;
      }
      row.coverage_pct = row.n_datasets > 0 ? 100.0 * static_cast<double>(covered) / static_cast<double>(row.n_datasets)
                                            : std::nan("");
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::string to_csv(const CoverageTable& table) {
  std::string out = "model,contamination,method,level,coverage_pct,n_datasets,B\n";
  for (const auto& r : table.rows) {
    out += std::string(to_string(r.model)) + ',' + r.contamination + ',' + std::string(to_string(r.method)) + ',' +
           format_double(r.level) + ',' + format_double(r.coverage_pct) + ',' + std::to_string(r.n_datasets) + ',' +
           std::to_string(r.replicates) + '\n';
  }
  return out;
}

}  // namespace chainladder
