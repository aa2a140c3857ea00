#include "pulmofuse/patching.hpp"

#include <string>

#include "pulmofuse/errors.hpp"

namespace pulmofuse {

namespace {

std::vector<int> axis_origins(int extent, int patch, int stride) {
  std::vector<int> out;
  int pos = 0;
  for (;;) {
    if (pos + patch >= extent) {
      out.push_back(extent - patch);
      break;
    }
    out.push_back(pos);
    pos += stride;
  }
  return out;
}

}  // namespace

PatchGrid plan_patches(Shape3 volume_shape, Shape3 patch_shape) {
  return plan_patches(volume_shape, patch_shape, patch_shape);
}

PatchGrid plan_patches(Shape3 volume_shape, Shape3 patch_shape, Shape3 stride) {
  if (patch_shape.nx > volume_shape.nx || patch_shape.ny > volume_shape.ny ||
      patch_shape.nz > volume_shape.nz)
    raise(Errc::patch_larger_than_volume,
          "patch extent exceeds volume extent");
  if (patch_shape.nx < 1 || patch_shape.ny < 1 || patch_shape.nz < 1)
    raise(Errc::shape_mismatch, "patch extents must be >= 1");
  if (stride.nx < 1 || stride.ny < 1 || stride.nz < 1)
    raise(Errc::shape_mismatch, "stride must be >= 1 per axis");

  const auto xs = axis_origins(volume_shape.nx, patch_shape.nx, stride.nx);
  const auto ys = axis_origins(volume_shape.ny, patch_shape.ny, stride.ny);
  const auto zs = axis_origins(volume_shape.nz, patch_shape.nz, stride.nz);

  PatchGrid grid;
  grid.volume_shape = volume_shape;
  grid.patch_shape = patch_shape;
  grid.origins.reserve(xs.size() * ys.size() * zs.size());
  for (int z : zs)
    for (int y : ys)
      for (int x : xs) grid.origins.push_back(Voxel{x, y, z});
  return grid;
}

template <class T>
Grid3<T> extract_patch(const Grid3<T>& v, Voxel origin, Shape3 patch_shape) {
  const Shape3 s = v.shape();
  if (origin[0] < 0 || origin[1] < 0 || origin[2] < 0 ||
      origin[0] + patch_shape.nx > s.nx || origin[1] + patch_shape.ny > s.ny ||
      origin[2] + patch_shape.nz > s.nz)
    raise(Errc::out_of_bounds, "patch window leaves the volume");

  Grid3<T> out(patch_shape);
  for (int z = 0; z < patch_shape.nz; ++z)
    for (int y = 0; y < patch_shape.ny; ++y)
      for (int x = 0; x < patch_shape.nx; ++x)
        out(x, y, z) = v(origin[0] + x, origin[1] + y, origin[2] + z);
  return out;
}

template Grid3<std::uint8_t> extract_patch(const Grid3<std::uint8_t>&, Voxel,
                                           Shape3);
template Grid3<std::int16_t> extract_patch(const Grid3<std::int16_t>&, Voxel,
                                           Shape3);
template Grid3<float> extract_patch(const Grid3<float>&, Voxel, Shape3);

Volume extract_patch(const Volume& v, Voxel origin, Shape3 patch_shape) {
  return v.visit([&](const auto& g) {
    return Volume(extract_patch(g, origin, patch_shape), v.geometry());
  });
}

StitchAccumulator::StitchAccumulator(Shape3 volume_shape, Shape3 patch_shape)
    : patch_shape_(patch_shape), sum_(volume_shape), count_(volume_shape) {}

void StitchAccumulator::add(Voxel origin, const FloatGrid& patch) {
  if (patch.shape() != patch_shape_)
    raise(Errc::shape_mismatch, "patch shape does not match the plan");
  const Shape3 s = sum_.shape();
  if (origin[0] < 0 || origin[1] < 0 || origin[2] < 0 ||
      origin[0] + patch_shape_.nx > s.nx ||
      origin[1] + patch_shape_.ny > s.ny || origin[2] + patch_shape_.nz > s.nz)
    raise(Errc::out_of_bounds, "patch window leaves the volume");

  for (int z = 0; z < patch_shape_.nz; ++z)
    for (int y = 0; y < patch_shape_.ny; ++y)
      for (int x = 0; x < patch_shape_.nx; ++x) {
        const std::size_t i =
            sum_.index(origin[0] + x, origin[1] + y, origin[2] + z);
        sum_[i] += patch(x, y, z);
        count_[i] += 1;
      }
}

void StitchAccumulator::merge(const StitchAccumulator& other) {
  if (other.sum_.shape() != sum_.shape() ||
      other.patch_shape_ != patch_shape_)
    raise(Errc::shape_mismatch, "accumulators cover different grids");
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    sum_[i] += other.sum_[i];
    count_[i] += other.count_[i];
  }
}

FloatGrid StitchAccumulator::finalize() const {
  FloatGrid out(sum_.shape());
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    if (count_[i] < 1)
      raise(Errc::missing_patch, "a voxel is covered by no patch");
    out[i] = static_cast<float>(sum_[i] / count_[i]);
  }
  return out;
}

FloatGrid stitch(const PatchGrid& grid, std::span<const FloatGrid> patches) {
  if (patches.size() != grid.origins.size())
    raise(Errc::missing_patch,
          "expected " + std::to_string(grid.origins.size()) + " patches, got " +
              std::to_string(patches.size()));
  StitchAccumulator acc(grid.volume_shape, grid.patch_shape);
  for (std::size_t i = 0; i < patches.size(); ++i)
    acc.add(grid.origins[i], patches[i]);
  return acc.finalize();
}

}  // namespace pulmofuse
