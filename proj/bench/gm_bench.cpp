// Serial reference vs OpenMP row-partitioned GM kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "hypgw/geometry.hpp"
#include "hypgw/kernels.hpp"

namespace {

using hypgw::CostKind;
using hypgw::Curvature;
using hypgw::Matrix;

struct Inputs {
  Matrix x;
  Matrix z;
};

Inputs make_inputs(std::size_t m, std::size_t n) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  Inputs in{Matrix(m, n), Matrix(m, n)};
  for (double& v : in.x.data()) v = g(rng);
  for (std::size_t i = 0; i < m; ++i) {
    hypgw::Vec t(n);
    for (double& v : t) v = 0.1 * g(rng);
    const auto p = hypgw::geometry::exp0(t, Curvature(1.0));
    std::copy(p.begin(), p.end(), in.z.row(i).begin());
  }
  return in;
}

void BM_GmValueSerial(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)), 32);
  for (auto _ : state) benchmark::DoNotOptimize(hypgw::kernels::gm_value_serial(in.x, in.z, CostKind{}, Curvature(1.0)));
  state.SetComplexityN(state.range(0));
}

void BM_GmValueParallel(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)), 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hypgw::kernels::gm(in.x, in.z, CostKind{}, Curvature(1.0), false, false).value);
  }
  state.SetComplexityN(state.range(0));
}

void BM_GmGradSerial(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)), 32);
  for (auto _ : state) {
    auto r = hypgw::kernels::gm_serial(in.x, in.z, CostKind{}, Curvature(1.0), false, true);
    benchmark::DoNotOptimize(r.grad_z.data().data());
  }
  state.SetComplexityN(state.range(0));
}

void BM_GmGradParallel(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)), 32);
  for (auto _ : state) {
    auto r = hypgw::kernels::gm(in.x, in.z, CostKind{}, Curvature(1.0), false, true);
    benchmark::DoNotOptimize(r.grad_z.data().data());
  }
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_GmValueSerial)->RangeMultiplier(2)->Range(128, 1024)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_GmValueParallel)->RangeMultiplier(2)->Range(128, 1024)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_GmGradSerial)->RangeMultiplier(2)->Range(128, 1024)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_GmGradParallel)->RangeMultiplier(2)->Range(128, 1024)->Complexity(benchmark::oNSquared);

BENCHMARK_MAIN();
