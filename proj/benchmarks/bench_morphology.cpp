#include <benchmark/benchmark.h>

#include <random>

#include "pulmofuse/morphology.hpp"
#include "pulmofuse/synth.hpp"

using namespace pulmofuse;

namespace {

MaskGrid random_mask(Shape3 shape, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  MaskGrid out(shape);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = uni(rng) < density ? 1 : 0;
  return out;
}

void BM_ConnectedComponents256(benchmark::State& state) {
  const MaskGrid mask = random_mask(Shape3{256, 256, 256}, 0.05, 99);
  for (auto _ : state) {
    const LabelMap lm = connected_components(mask, Connectivity::twenty_six);
    benchmark::DoNotOptimize(lm.sizes.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(mask.size()));
}
BENCHMARK(BM_ConnectedComponents256)->Unit(benchmark::kMillisecond);

void BM_ConnectedComponentsVascular(benchmark::State& state) {
  PhantomSpec spec = phantom_preset("y-bifurcation");
  spec.noise_sigma_hu = 0;
  const Phantom ph = rasterize_phantom(spec);
  for (auto _ : state) {
    const LabelMap lm =
        connected_components(ph.mask, Connectivity::twenty_six);
    benchmark::DoNotOptimize(lm.sizes.data());
  }
}
BENCHMARK(BM_ConnectedComponentsVascular)->Unit(benchmark::kMicrosecond);

void BM_DistanceTransform(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MaskGrid mask = random_mask(Shape3{n, n, n}, 0.3, 7);
  const Spacing3 spacing{0.75, 0.75, 1.0};
  for (auto _ : state) {
    const FloatGrid d = distance_transform(mask, spacing);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(mask.size()));
}
BENCHMARK(BM_DistanceTransform)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Skeletonize(benchmark::State& state) {
  PhantomSpec spec = phantom_preset("y-bifurcation");
  spec.noise_sigma_hu = 0;
  const Phantom ph = rasterize_phantom(spec);
  for (auto _ : state) {
    const MaskGrid skel = skeletonize(ph.mask);
    benchmark::DoNotOptimize(skel.data());
  }
}
BENCHMARK(BM_Skeletonize)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
