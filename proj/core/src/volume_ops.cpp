#include "pulmofuse/volume_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "pulmofuse/errors.hpp"

namespace pulmofuse {

Volume clip_scale_hu(const Volume& v, ClipRange range) {
  if (!(range.lo < range.hi))
    raise(Errc::degenerate_range, "clip range must satisfy lo < hi");
  const double lo = range.lo;
  const double span = range.hi - range.lo;
  FloatGrid out(v.shape());
  v.visit([&](const auto& g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      double x = static_cast<double>(g[i]);
      x = std::clamp(x, range.lo, range.hi);
      out[i] = static_cast<float>((x - lo) / span);
    }
  });
  return Volume(std::move(out), v.geometry());
}

CropResult crop_uninformative_slices(const Volume& v) {
  const Shape3 s = v.shape();
  if (s.count() == 0) raise(Errc::empty_volume, "cannot crop an empty volume");

  return v.visit([&](const auto& g) -> CropResult {
    using T = std::decay_t<decltype(g[0])>;
    T min_val = g[0];
    for (std::size_t i = 1; i < g.size(); ++i) min_val = std::min(min_val, g[i]);

    auto slice_constant_min = [&](int z) {
      for (int y = 0; y < s.ny; ++y)
        for (int x = 0; x < s.nx; ++x)
          if (g(x, y, z) != min_val) return false;
      return true;
    };

    int z0 = 0;
    while (z0 < s.nz && slice_constant_min(z0)) ++z0;
    if (z0 == s.nz)
      raise(Errc::all_uninformative,
            "every slice is constant at the global minimum");
    int z1 = s.nz;
    while (z1 > z0 && slice_constant_min(z1 - 1)) --z1;

    Grid3<T> out(Shape3{s.nx, s.ny, z1 - z0});
    for (int z = z0; z < z1; ++z)
      for (int y = 0; y < s.ny; ++y)
        for (int x = 0; x < s.nx; ++x) out(x, y, z - z0) = g(x, y, z);

    CropRecord rec;
    rec.original = s;
    rec.x0 = 0;
    rec.x1 = s.nx;
    rec.y0 = 0;
    rec.y1 = s.ny;
    rec.z0 = z0;
    rec.z1 = z1;
    return CropResult{Volume(std::move(out), v.geometry()), rec};
  });
}

Volume uncrop(const Volume& cropped, const CropRecord& rec, double fill) {
  const Shape3 s = cropped.shape();
  if (s.nx != rec.x1 - rec.x0 || s.ny != rec.y1 - rec.y0 ||
      s.nz != rec.z1 - rec.z0)
    raise(Errc::shape_mismatch, "crop record does not match cropped shape");

  return cropped.visit([&](const auto& g) {
    using T = std::decay_t<decltype(g[0])>;
    Grid3<T> out(rec.original, static_cast<T>(fill));
    for (int z = 0; z < s.nz; ++z)
      for (int y = 0; y < s.ny; ++y)
        for (int x = 0; x < s.nx; ++x)
          out(x + rec.x0, y + rec.y0, z + rec.z0) = g(x, y, z);
    return Volume(std::move(out), cropped.geometry());
  });
}

void AugmentationSpec::validate() const {
  if (!(rotation_degrees >= -30.0 && rotation_degrees <= 30.0))
    raise(Errc::spec_out_of_range, "rotation must lie in [-30, 30] degrees");
  if (!(std::abs(intensity_shift_hu) <= 10.0))
    raise(Errc::spec_out_of_range, "intensity shift must lie in [-10, 10] HU");
}

AugmentationSpec AugmentationSpec::random(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AugmentationSpec spec;
  spec.seed = seed;
  spec.flip_x = (rng() & 1u) != 0;
  spec.flip_y = (rng() & 1u) != 0;
  spec.flip_z = (rng() & 1u) != 0;
  std::uniform_real_distribution<double> rot(-30.0, 30.0);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  spec.rotation_degrees = rot(rng);
  spec.intensity_shift_hu = shift(rng);
  spec.rotation_axis = Axis::z;
  return spec;
}

namespace {

FloatGrid flip_grid(const FloatGrid& g, bool fx, bool fy, bool fz) {
  const Shape3 s = g.shape();
  FloatGrid out(s);
  for (int z = 0; z < s.nz; ++z) {
    const int sz = fz ? s.nz - 1 - z : z;
    for (int y = 0; y < s.ny; ++y) {
      const int sy = fy ? s.ny - 1 - y : y;
      for (int x = 0; x < s.nx; ++x) {
        const int sx = fx ? s.nx - 1 - x : x;
        out(x, y, z) = g(sx, sy, sz);
      }
    }
  }
  return out;
}

double sample_trilinear(const FloatGrid& g, double x, double y, double z) {
  const Shape3 s = g.shape();
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int z0 = static_cast<int>(std::floor(z));
  const double fx = x - x0, fy = y - y0, fz = z - z0;

  double acc = 0.0;
  for (int dz = 0; dz <= 1; ++dz)
    for (int dy = 0; dy <= 1; ++dy)
      for (int dx = 0; dx <= 1; ++dx) {
        const int xi = x0 + dx, yi = y0 + dy, zi = z0 + dz;
        const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) *
                         (dz ? fz : 1.0 - fz);
        if (w == 0.0) continue;
        const double v = g.in_bounds(xi, yi, zi) ? g(xi, yi, zi) : 0.0;
        acc += w * v;
      }
  return acc;
}

FloatGrid rotate_grid(const FloatGrid& g, Axis axis, double degrees) {
  const Shape3 s = g.shape();
  const double theta = degrees * std::numbers::pi_v<double> / 180.0;
  // Inverse mapping: rotate each output index back into the source grid.
  const double c = std::cos(-theta), sn = std::sin(-theta);
  const double cx = (s.nx - 1) * 0.5;
  const double cy = (s.ny - 1) * 0.5;
  const double cz = (s.nz - 1) * 0.5;

  FloatGrid out(s);
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        double sx = dx, sy = dy, sz = dz;
        switch (axis) {
          case Axis::z:
            sx = c * dx - sn * dy;
            sy = sn * dx + c * dy;
            break;
          case Axis::y:
            sx = c * dx + sn * dz;
            sz = -sn * dx + c * dz;
            break;
          case Axis::x:
            sy = c * dy - sn * dz;
            sz = sn * dy + c * dz;
            break;
        }
        out(x, y, z) = static_cast<float>(
            sample_trilinear(g, sx + cx, sy + cy, sz + cz));
      }
  return out;
}

}  // namespace

Volume apply_augmentation(const Volume& normalized,
                          const AugmentationSpec& spec) {
  spec.validate();
  FloatGrid g = normalized.f32();  // raises when the input is not float-32

  if (spec.flip_x || spec.flip_y || spec.flip_z)
    g = flip_grid(g, spec.flip_x, spec.flip_y, spec.flip_z);
  if (spec.rotation_degrees != 0.0)
    g = rotate_grid(g, spec.rotation_axis, spec.rotation_degrees);
  if (spec.intensity_shift_hu != 0.0) {
    // 10 HU against the default 2000 HU clip span.
    const float delta = static_cast<float>(spec.intensity_shift_hu / 2000.0);
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] = std::clamp(g[i] + delta, 0.0f, 1.0f);
  }
  return Volume(std::move(g), normalized.geometry());
}

Image2 project_sum(const Volume& v, Plane plane) {
  const Shape3 s = v.shape();
  if (s.count() == 0)
    raise(Errc::empty_volume, "cannot project an empty volume");

  Image2 img;
  switch (plane) {
    case Plane::axial:
      img.width = s.nx;
      img.height = s.ny;
      break;
    case Plane::coronal:
      img.width = s.nx;
      img.height = s.nz;
      break;
    case Plane::sagittal:
      img.width = s.ny;
      img.height = s.nz;
      break;
  }
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0.0);

  v.visit([&](const auto& g) {
    for (int z = 0; z < s.nz; ++z)
      for (int y = 0; y < s.ny; ++y)
        for (int x = 0; x < s.nx; ++x) {
          const double val = static_cast<double>(g(x, y, z));
          switch (plane) {
            case Plane::axial: img.at(x, y) += val; break;
            case Plane::coronal: img.at(x, z) += val; break;
            case Plane::sagittal: img.at(y, z) += val; break;
          }
        }
  });
  return img;
}

std::vector<std::uint8_t> to_gray8(const Image2& img) {
  std::vector<std::uint8_t> out(img.pixels.size(), 0);
  if (img.pixels.empty()) return out;
  const auto [lo_it, hi_it] =
      std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi > lo) {
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      out[i] = static_cast<std::uint8_t>(
          std::lround((img.pixels[i] - lo) / (hi - lo) * 255.0));
  }
  return out;
}

void write_pgm(ByteSink& sink, const Image2& img) {
  const std::string head = "P5\n" + std::to_string(img.width) + " " +
                           std::to_string(img.height) + "\n255\n";
  sink.write(head.data(), head.size());
  const auto gray = to_gray8(img);
  sink.write(gray.data(), gray.size());
}

}  // namespace pulmofuse
