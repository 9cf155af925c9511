#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "chainladder/triangle.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(CHAINLADDER_DATA_DIR) + "/" + name; }

inline chainladder::Triangle taylor_ashe() { return chainladder::read_triangle(data_path("taylor_ashe.csv")); }
inline chainladder::Triangle simulated() { return chainladder::read_triangle(data_path("simulated.csv")); }
inline chainladder::Triangle simulated_contaminated() {
  return chainladder::read_triangle(data_path("simulated_contaminated.csv"));
}
inline chainladder::Triangle schedule_p() { return chainladder::read_triangle(data_path("schedule_p.csv")); }

/// Positive triangle with multiplicative row/column structure plus noise.
inline chainladder::Triangle random_triangle(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(50.0, 5000.0);
  std::uniform_real_distribution<double> noise(0.5, 1.5);
  std::vector<double> row(static_cast<std::size_t>(n)), col(static_cast<std::size_t>(n));
  for (auto& v : row) v = level(rng);
  for (int j = 0; j < n; ++j) col[static_cast<std::size_t>(j)] = std::pow(0.7, j);
  std::vector<double> values;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n - i; ++j)
      values.push_back(row[static_cast<std::size_t>(i)] * col[static_cast<std::size_t>(j)] * noise(rng));
  return chainladder::Triangle(n, std::move(values));
}

/// Poisson counts with a decaying development pattern.
inline chainladder::Triangle poisson_triangle(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v;
  for (const chainladder::Cell c : chainladder::observed_cells(n)) {
    const double lambda = 10000.0 * (1.0 + (c.row - 1) * 0.05) * std::pow(0.3, 2.0 * (c.col - 1) / n);
    v.push_back(static_cast<double>(std::poisson_distribution<long>(lambda)(rng)));
  }
  return chainladder::Triangle(n, std::move(v));
}

/// Every shipped triangle plus random ones of sizes 3..10.
inline std::vector<chainladder::Triangle> corpus() {
  std::vector<chainladder::Triangle> out{taylor_ashe(), simulated(), simulated_contaminated(), schedule_p()};
  for (int k = 0; k < 12; ++k) out.push_back(random_triangle(3 + k % 8, 70 + static_cast<std::uint64_t>(k)));
  return out;
}

}  // namespace fixtures
