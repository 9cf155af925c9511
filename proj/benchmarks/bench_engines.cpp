#include <benchmark/benchmark.h>

#include <string>

#include "chainladder/bootstrap.hpp"
#include "chainladder/cdr.hpp"
#include "chainladder/poisson_glm.hpp"
#include "chainladder/robust_glm.hpp"
#include "chainladder/triangle.hpp"

namespace cl = chainladder;

namespace {

const cl::Triangle& taylor_ashe() {
  static const cl::Triangle t = cl::read_triangle(std::string(CHAINLADDER_DATA_DIR) + "/taylor_ashe.csv");
  return t;
}

const cl::Triangle& simulated() {
  static const cl::Triangle t = cl::read_triangle(std::string(CHAINLADDER_DATA_DIR) + "/simulated.csv");
  return t;
}

void BM_FitPoisson(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cl::fit_poisson(taylor_ashe()));
}
BENCHMARK(BM_FitPoisson);

void BM_DevFactors(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cl::dev_factors(taylor_ashe()));
}
BENCHMARK(BM_DevFactors);

void BM_FitRobust(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cl::fit_robust(simulated()));
}
BENCHMARK(BM_FitRobust)->Unit(benchmark::kMillisecond);

// One replicate per iteration; the range selects the engine.
void BM_Replicate(benchmark::State& state) {
  cl::BootstrapOptions opts;
  opts.method = static_cast<cl::Method>(state.range(0));
  opts.threads = 1;
  const cl::ReplicateEngine engine(simulated(), opts);
  std::uint64_t b = 0;
  for (auto _ : state) benchmark::DoNotOptimize(engine.draw(b++));
  state.SetLabel(std::string(cl::to_string(opts.method)));
}
BENCHMARK(BM_Replicate)->DenseRange(0, 4)->Unit(benchmark::kMicrosecond);

void BM_CdrReplicate(benchmark::State& state) {
  cl::BootstrapOptions opts;
  opts.threads = 1;
  const cl::ReplicateEngine engine(simulated(), opts);
  const auto rep = engine.draw(0);
  for (auto _ : state) benchmark::DoNotOptimize(cl::cdr_replicate(*rep));
}
BENCHMARK(BM_CdrReplicate)->Unit(benchmark::kMicrosecond);

void BM_BootstrapFrb(benchmark::State& state) {
  cl::BootstrapOptions opts;
  opts.method = cl::Method::frb;
  opts.replicates = static_cast<std::size_t>(state.range(0));
  opts.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(cl::run_bootstrap(simulated(), opts));
}
BENCHMARK(BM_BootstrapFrb)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
