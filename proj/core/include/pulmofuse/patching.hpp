#pragma once

#include <span>
#include <vector>

#include "pulmofuse/volume.hpp"

namespace pulmofuse {

// Deterministic sliding-window plan. Origins step by `stride` per axis and
// the last window per axis is clamped flush to the boundary, so every voxel
// is covered and no window reads out of bounds.
struct PatchGrid {
  Shape3 volume_shape{};
  Shape3 patch_shape{};
  std::vector<Voxel> origins;  // sorted by (z, y, x)
};

PatchGrid plan_patches(Shape3 volume_shape, Shape3 patch_shape);
PatchGrid plan_patches(Shape3 volume_shape, Shape3 patch_shape, Shape3 stride);

template <class T>
Grid3<T> extract_patch(const Grid3<T>& v, Voxel origin, Shape3 patch_shape);

Volume extract_patch(const Volume& v, Voxel origin, Shape3 patch_shape);

// Overlap-averaging reassembly: per-voxel arithmetic mean of every covering
// patch. Sums are kept in double so the mean of k identical values is that
// value exactly, which makes stitch(extract(v)) == v hold bit-for-bit.
// A single accumulator is single-owner; run several over disjoint patch sets
// and merge when parallelizing.
class StitchAccumulator {
 public:
  StitchAccumulator(Shape3 volume_shape, Shape3 patch_shape);

  void add(Voxel origin, const FloatGrid& patch);
  void merge(const StitchAccumulator& other);

  const Grid3<double>& sum() const { return sum_; }
  const Grid3<std::int32_t>& count() const { return count_; }

  // Divides sum by coverage; every voxel must be covered at least once.
  FloatGrid finalize() const;

 private:
  Shape3 patch_shape_;
  Grid3<double> sum_;
  Grid3<std::int32_t> count_;
};

// One patch per grid origin, in origin order.
FloatGrid stitch(const PatchGrid& grid, std::span<const FloatGrid> patches);

}  // namespace pulmofuse
