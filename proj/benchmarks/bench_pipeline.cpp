#include <benchmark/benchmark.h>

#include <random>

#include "pulmofuse/ensemble.hpp"
#include "pulmofuse/nifti.hpp"
#include "pulmofuse/patching.hpp"
#include "pulmofuse/volume_ops.hpp"

using namespace pulmofuse;

namespace {

FloatGrid random_probs(Shape3 shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  FloatGrid out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = uni(rng);
  return out;
}

void BM_FuseSixModels(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Shape3 shape{n, n, n};
  std::vector<FloatGrid> preds;
  for (int m = 0; m < 6; ++m) preds.push_back(random_probs(shape, 10 + m));
  const EnsembleWeights w = compute_weights(
      ModelScores{{84.30, 85.50, 85.52, 86.55, 86.75, 86.87}});
  for (auto _ : state) {
    const MaskGrid out = fuse_and_binarize(preds, w);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(state.iterations() * 6 *
                          static_cast<std::int64_t>(shape.count()) * 4);
}
BENCHMARK(BM_FuseSixModels)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_NiftiWriteReadGz(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Volume v(random_probs(Shape3{n, n, n}, 3), Geometry{});
  for (auto _ : state) {
    const auto bytes = write_nifti_bytes(v, true);
    const NiftiReadResult r = read_nifti(bytes);
    benchmark::DoNotOptimize(r.volume.voxel_count());
  }
  state.SetBytesProcessed(state.iterations() *
                          static_cast<std::int64_t>(v.voxel_count()) * 4);
}
BENCHMARK(BM_NiftiWriteReadGz)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ClipScale(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  Grid3<std::int16_t> g(Shape3{n, n, n});
  for (auto& x : g.values()) x = static_cast<std::int16_t>(rng() % 4000 - 2000);
  const Volume v(std::move(g), Geometry{});
  for (auto _ : state) {
    const Volume out = clip_scale_hu(v);
    benchmark::DoNotOptimize(out.voxel_count());
  }
}
BENCHMARK(BM_ClipScale)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ExtractStitch(benchmark::State& state) {
  const Shape3 shape{128, 128, 57};
  const Shape3 patch{32, 32, 32};
  const FloatGrid v = random_probs(shape, 8);
  const PatchGrid grid = plan_patches(shape, patch);
  for (auto _ : state) {
    std::vector<FloatGrid> patches;
    patches.reserve(grid.origins.size());
    for (const Voxel& o : grid.origins)
      patches.push_back(extract_patch(v, o, patch));
    const FloatGrid out = stitch(grid, patches);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ExtractStitch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
