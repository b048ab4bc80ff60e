// Serial reference vs OpenMP kernels.

#include "faster/decomp.hpp"
#include "faster/kernels.hpp"
#include "faster/sim.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using faster::kernels::Exec;

std::vector<std::uint8_t> randomSeeds(const faster::Index3& dims, double density) {
  std::mt19937_64 rng(7);
  std::bernoulli_distribution coin(density);
  std::vector<std::uint8_t> seed(static_cast<std::size_t>(dims.prod()));
  for (auto& s : seed) s = coin(rng) ? 1 : 0;
  return seed;
}

void BM_Edt(benchmark::State& state, Exec exec) {
  const faster::Index3 dims(100, 100, 15);
  const auto seed = randomSeeds(dims, 0.02);
  std::vector<double> out;
  for (auto _ : state) {
    faster::kernels::squaredDistanceTransform(seed, dims, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * dims.prod());
}
BENCHMARK_CAPTURE(BM_Edt, serial, Exec::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Edt, parallel, Exec::Parallel)->Unit(benchmark::kMillisecond);

void BM_Render(benchmark::State& state, Exec exec) {
  faster::ForestParams fp;
  const faster::World world = faster::make_forest(fp, 3);
  const faster::SensorModel sensor;
  faster::DepthScan scan;
  for (auto _ : state) {
    faster::render_scan_into(world, world.start, 0.0, sensor, scan, exec);
    benchmark::DoNotOptimize(scan.rays.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(scan.rays.size()));
}
BENCHMARK_CAPTURE(BM_Render, serial, Exec::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Render, parallel, Exec::Parallel)->Unit(benchmark::kMillisecond);

void BM_Volume(benchmark::State& state, Exec exec) {
  faster::Polyhedron poly;
  poly.box_lo = faster::Vec3(-2, -2, -2);
  poly.box_hi = faster::Vec3(2, 2, 2);
  poly.addFace(faster::Vec3(1, 1, 1).normalized(), 1.0);
  poly.addFace(faster::Vec3(-1, 0, 0), 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(faster::volume(poly, 200000, 11, exec));
  state.SetItemsProcessed(state.iterations() * 200000);
}
BENCHMARK_CAPTURE(BM_Volume, serial, Exec::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Volume, parallel, Exec::Parallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
