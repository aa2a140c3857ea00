#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "pulmofuse/volume.hpp"

namespace pulmofuse {

// A tube swept along a polyline (mm coordinates) with a per-point radius
// that interpolates linearly along each segment.
struct TubeSpec {
  std::vector<std::array<double, 3>> polyline;
  std::vector<double> radius_mm;
  void validate() const;
};

struct PhantomSpec {
  Shape3 shape{};
  Spacing3 spacing{};
  TubeSpec trunk;
  std::vector<TubeSpec> branches;  // start points lie on the trunk polyline
  double background_hu = -1000.0;
  double vessel_hu = 300.0;
  double noise_sigma_hu = 0.0;
  std::uint64_t seed = 0;
  void validate() const;

  // Analytic pi*r^2*l volume of one tube (no overlap correction).
  static double tube_volume_mm3(const TubeSpec& tube);
};

struct Phantom {
  Volume hu;          // background_hu / vessel_hu (+ optional noise), f32
  MaskGrid mask;      // 1 inside any tube
  RegionGrid regions; // trunk voxels 1, branch-only voxels 2
  Geometry geometry;
};

// Voxels are inside when their center lies within the interpolated radius of
// some tube segment; trunk membership wins over branch at overlaps.
Phantom rasterize_phantom(const PhantomSpec& spec);

// Presets used across the test and demo pipelines: "cylinder" and
// "y-bifurcation".
PhantomSpec phantom_preset(std::string_view name, std::uint64_t seed = 0);
std::vector<std::string_view> phantom_preset_names();

struct MockCorruption {
  double boundary_flip_prob = 0.0;
  int detach_blob_count = 0;
};

// Stand-in for a trained model: the ground truth with seeded boundary flips,
// optional detached false-positive blobs, and a light smoothing into (0, 1).
// Zero corruption returns the mask cast to float unchanged.
FloatGrid mock_predict(const MaskGrid& gt, const MockCorruption& corruption,
                       std::uint64_t seed);

// The fixed mock-model roster the demo pipeline runs: model m flips boundary
// voxels with probability 0.10 + 0.02*m, adds m % 3 detached blobs, and is
// seeded with base_seed * 1000 + m, so CLI and library runs agree bit-for-bit.
std::vector<FloatGrid> mock_prediction_suite(const MaskGrid& gt, int count,
                                             std::uint64_t base_seed);

}  // namespace pulmofuse
