#include <benchmark/benchmark.h>

#include "qstrat/analysis.hpp"
#include "qstrat/candidates.hpp"
#include "qstrat/energies.hpp"
#include "qstrat/regularity.hpp"
#include "qstrat/solver.hpp"
#include "qstrat/windows.hpp"

namespace {

using namespace qstrat;

void BM_SolverStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridSpec g(3, n, 1.0 / n, true);
  Snapshot u = random_smooth_data(g, 2, 1);
  const double dt = cfl_dt(g.h, 3, 0.25);
  for (auto _ : state) {
    u = step(u, dt);
    benchmark::DoNotOptimize(u.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.cell_count()));
}
BENCHMARK(BM_SolverStep)->Arg(16)->Arg(32);

void BM_StruweLayers(benchmark::State& state) {
  const auto cone = ConeTrajectory::standard(3, 2);
  SpaceTimePoint X = origin_point(3);
  X.x[0] = 0.5;
  const std::vector<double> radii{1.0, 0.25, 0.0625, 0.015625};
  const StruweQuadrature q{6.0, 0.5, 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(struwe_layers(*cone, X, radii, q));
}
BENCHMARK(BM_StruweLayers)->Unit(benchmark::kMillisecond);

void BM_DistancesByLevel(benchmark::State& state) {
  const int cells = static_cast<int>(state.range(0));
  const auto cone = ConeTrajectory::standard(3, 2);
  const Dictionary dict(3, 2, DictionaryConfig{});
  const auto grid = std::make_shared<const WindowGrid>(3, cells, cells);
  SpaceTimePoint X = origin_point(3);
  X.x[0] = 0.3;
  const Window w = sample_window(*cone, X, 0.25, grid);
  for (auto _ : state) benchmark::DoNotOptimize(distances_by_level(w, dict));
}
BENCHMARK(BM_DistancesByLevel)->Arg(9)->Arg(17)->Unit(benchmark::kMillisecond);

void BM_RegularityScale(benchmark::State& state) {
  const auto cone = ConeTrajectory::standard(3, 2);
  SpaceTimePoint X = origin_point(3);
  X.x << 0.12, 0.096, 0.128;
  for (auto _ : state) benchmark::DoNotOptimize(regularity_scale(*cone, X, 1.0, RegularityOptions{0.004, 0.0}));
}
BENCHMARK(BM_RegularityScale)->Unit(benchmark::kMillisecond);

// Args: m, 1/gamma.
void BM_GreedyCover(benchmark::State& state) {
  const double gamma = 1.0 / static_cast<double>(state.range(1));
  const auto pts = full_ball_lattice(static_cast<int>(state.range(0)), gamma);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_cover(pts, gamma));
  state.counters["points"] = static_cast<double>(pts.size());
}
BENCHMARK(BM_GreedyCover)->Args({2, 3})->Args({2, 4})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
