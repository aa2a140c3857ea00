#pragma once

#include <cstdint>
#include <vector>

#include "pulmofuse/bytes.hpp"
#include "pulmofuse/volume.hpp"

namespace pulmofuse {

struct ClipRange {
  double lo = -1000.0;
  double hi = 1000.0;
};

// clamp to [lo, hi] then scale linearly to [0, 1]; output is float-32.
Volume clip_scale_hu(const Volume& v, ClipRange range = {});

// Half-open kept ranges per axis, enough to undo the crop exactly.
struct CropRecord {
  Shape3 original{};
  int x0 = 0, x1 = 0;
  int y0 = 0, y1 = 0;
  int z0 = 0, z1 = 0;
  bool operator==(const CropRecord&) const = default;
};

// Drops leading/trailing z-slices whose voxels all equal the volume's global
// minimum (scanner padding). In-plane extents are never touched.
struct CropResult {
  Volume volume;
  CropRecord record;
};
CropResult crop_uninformative_slices(const Volume& v);

// Restores the original shape, placing `fill` outside the kept range.
Volume uncrop(const Volume& cropped, const CropRecord& record, double fill);

enum class Axis : std::uint8_t { x, y, z };

struct AugmentationSpec {
  bool flip_x = false;
  bool flip_y = false;
  bool flip_z = false;
  double rotation_degrees = 0.0;  // in [-30, 30]
  Axis rotation_axis = Axis::z;
  double intensity_shift_hu = 0.0;  // in [-10, 10]
  std::uint64_t seed = 0;

  void validate() const;
  // Draws flips, rotation and shift uniformly within the allowed ranges.
  static AugmentationSpec random(std::uint64_t seed);
};

// Flips are exact index reversals; rotation resamples trilinearly about the
// volume center (out-of-bounds reads as 0); the intensity shift is applied
// as shift/2000 in normalized space and the result re-clamped to [0, 1].
Volume apply_augmentation(const Volume& normalized, const AugmentationSpec& spec);

enum class Plane : std::uint8_t { axial, coronal, sagittal };

struct Image2 {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Sums voxels along the axis normal to the plane (double accumulation).
Image2 project_sum(const Volume& v, Plane plane);

// Min-max normalization to [0, 255]; a constant image maps to all zeros.
std::vector<std::uint8_t> to_gray8(const Image2& img);

// Binary PGM (P5, maxval 255).
void write_pgm(ByteSink& sink, const Image2& img);

}  // namespace pulmofuse
