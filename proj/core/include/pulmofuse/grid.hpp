#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pulmofuse/errors.hpp"

namespace pulmofuse {

struct Shape3 {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool operator==(const Shape3&) const = default;
};

// Voxel spacing in mm along x, y, z.
struct Spacing3 {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;
  bool operator==(const Spacing3&) const = default;
};

// Row-major 4x4 orientation matrix. Carried through the pipeline untouched;
// all processing happens in voxel index space.
using Affine44 = std::array<double, 16>;

inline Affine44 identity_affine() {
  return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
}

inline Affine44 spacing_affine(const Spacing3& s) {
  Affine44 a = identity_affine();
  a[0] = s.sx;
  a[5] = s.sy;
  a[10] = s.sz;
  return a;
}

using Voxel = std::array<int, 3>;  // (x, y, z)

// Dense 3D array, x-fastest storage order.
template <class T>
class Grid3 {
 public:
  Grid3() = default;

  explicit Grid3(Shape3 shape, T fill = T{}) : shape_(shape) {
    if (shape.nx < 0 || shape.ny < 0 || shape.nz < 0)
      raise(Errc::shape_mismatch, "negative grid extent");
    data_.assign(shape.count(), fill);
  }

  Grid3(Shape3 shape, std::vector<T> values)
      : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape_.count())
      raise(Errc::shape_mismatch, "buffer size does not match grid shape");
  }

  const Shape3& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(shape_.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(shape_.ny) * static_cast<std::size_t>(z));
  }

  T& operator()(int x, int y, int z) { return data_[index(x, y, z)]; }
  const T& operator()(int x, int y, int z) const { return data_[index(x, y, z)]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool in_bounds(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < shape_.nx && y < shape_.ny &&
           z < shape_.nz;
  }

  Voxel unravel(std::size_t i) const {
    const auto nx = static_cast<std::size_t>(shape_.nx);
    const auto ny = static_cast<std::size_t>(shape_.ny);
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
            static_cast<int>(i / (nx * ny))};
  }

  bool operator==(const Grid3&) const = default;

 private:
  Shape3 shape_{};
  std::vector<T> data_;
};

using MaskGrid = Grid3<std::uint8_t>;
using FloatGrid = Grid3<float>;
// Voxel labels: 0 background, 1 main artery, 2 branch.
using RegionGrid = Grid3<std::uint8_t>;

inline constexpr std::uint8_t kRegionBackground = 0;
inline constexpr std::uint8_t kRegionMain = 1;
inline constexpr std::uint8_t kRegionBranch = 2;

}  // namespace pulmofuse
