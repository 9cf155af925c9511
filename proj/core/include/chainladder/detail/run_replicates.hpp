#pragma once

#include <cmath>
#include <string>

#include "chainladder/error.hpp"
#include "chainladder/parallel.hpp"

namespace chainladder {

template <typename T, typename Fn>
std::pair<std::vector<T>, std::size_t> run_replicates(std::size_t count, const BootstrapOptions& options, Fn&& fn) {
  const auto limit = static_cast<std::size_t>(std::floor(options.max_failure_rate * static_cast<double>(count)));
  std::vector<T> out;
  out.reserve(count);
  std::size_t next = 0;
  std::size_t failed = 0;
  while (out.size() < count) {
    const std::size_t need = count - out.size();
    std::vector<std::optional<T>> slots(need);
    parallel_for(0, need, options.threads, [&](std::size_t i) { slots[i] = fn(static_cast<std::uint64_t>(next + i)); });
    for (auto& s : slots) {
      if (s) {
        out.push_back(std::move(*s));
      } else {
        ++failed;
      }
    }
    next += need;
    if (failed > limit) {
      throw BootstrapError(std::to_string(failed) + " of " + std::to_string(next) +
                           " bootstrap refits failed (limit " + std::to_string(limit) + ")");
    }
  }
  return {std::move(out), failed};
}

}  // namespace chainladder
