// Exact Euclidean feature/distance transform, separable lower-envelope
// method (Felzenszwalb & Huttenlocher), one pass per axis with the axis
// spacing squared as the parabola weight. Each pass carries the source
// voxel of the current best site along, so the final distances can be
// recomputed straight from voxel offsets -- the same arithmetic a
// brute-force check uses.

#include <cmath>

#include "pulmofuse/errors.hpp"
#include "pulmofuse/morphology.hpp"

namespace pulmofuse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One lower-envelope sweep over a line of length n with site heights f.
// site[i] carries the source voxel (flat index) of f's current minimizer.
struct LinePass {
  std::vector<int> v;       // envelope site positions
  std::vector<double> z;    // envelope breakpoints
  std::vector<double> f;    // heights
  std::vector<std::uint32_t> src;
  std::vector<double> out_f;
  std::vector<std::uint32_t> out_src;

  void resize(std::size_t n) {
    v.resize(n);
    z.resize(n + 1);
    f.resize(n);
    src.resize(n);
    out_f.resize(n);
    out_src.resize(n);
  }

  void run(int n, double t) {
    auto intersect = [&](int q, int p) {
      return ((f[q] + t * q * q) - (f[p] + t * p * p)) / (2.0 * t * (q - p));
    };

    int k = -1;
    for (int q = 0; q < n; ++q) {
      if (f[q] == kInf) continue;  // infinite parabolas never win
      if (k < 0) {
        k = 0;
        v[0] = q;
        z[0] = -kInf;
        z[1] = kInf;
        continue;
      }
      double s = intersect(q, v[k]);
      while (s <= z[k]) {
        --k;  // z[0] = -inf, so k never drops below 0
        s = intersect(q, v[k]);
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
    }

    if (k < 0) {  // no finite site in this line
      for (int q = 0; q < n; ++q) {
        out_f[q] = kInf;
        out_src[q] = kNoSite;
      }
      return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
      while (z[j + 1] < q) ++j;
      const int p = v[j];
      const double d = q - p;
      out_f[q] = t * d * d + f[p];
      out_src[q] = src[p];
    }
  }
};

}  // namespace

Grid3<std::uint32_t> nearest_site_transform(const MaskGrid& sites,
                                            Spacing3 spacing) {
  const Shape3 s = sites.shape();
  const std::size_t n = s.count();
  Grid3<std::uint32_t> src(s, kNoSite);
  if (n == 0) return src;

  std::vector<double> dist2(n, kInf);
  for (std::size_t i = 0; i < n; ++i)
    if (sites[i]) {
      dist2[i] = 0.0;
      src[i] = static_cast<std::uint32_t>(i);
    }

  LinePass pass;
  const std::size_t sx = 1;
  const std::size_t sy = static_cast<std::size_t>(s.nx);
  const std::size_t sz = sy * static_cast<std::size_t>(s.ny);

  auto sweep = [&](int len, std::size_t stride, double step, auto&& for_each_line) {
    if (len == 0) return;
    pass.resize(static_cast<std::size_t>(len));
    const double t = step * step;
    for_each_line([&](std::size_t base) {
      for (int i = 0; i < len; ++i) {
        pass.f[i] = dist2[base + stride * i];
        pass.src[i] = src[base + stride * i];
      }
      pass.run(len, t);
      for (int i = 0; i < len; ++i) {
        dist2[base + stride * i] = pass.out_f[i];
        src[base + stride * i] = pass.out_src[i];
      }
    });
  };

  sweep(s.nz, sz, spacing.sz, [&](auto&& line) {
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x)
        line(static_cast<std::size_t>(x) + sy * y);
  });
  sweep(s.ny, sy, spacing.sy, [&](auto&& line) {
    for (int z = 0; z < s.nz; ++z)
      for (int x = 0; x < s.nx; ++x)
        line(static_cast<std::size_t>(x) + sz * z);
  });
  sweep(s.nx, sx, spacing.sx, [&](auto&& line) {
    for (int z = 0; z < s.nz; ++z)
      for (int y = 0; y < s.ny; ++y) line(sy * y + sz * z);
  });

  return src;
}

FloatGrid distance_transform(const MaskGrid& mask, Spacing3 spacing) {
  const Shape3 s = mask.shape();
  MaskGrid background(s);
  bool any_bg = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    background[i] = mask[i] ? std::uint8_t{0} : std::uint8_t{1};
    any_bg |= background[i] != 0;
  }

  FloatGrid out(s, 0.0f);
  if (!any_bg) {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = std::numeric_limits<float>::infinity();
    return out;
  }

  const Grid3<std::uint32_t> src = nearest_site_transform(background, spacing);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const Voxel p = mask.unravel(i);
    const Voxel q = mask.unravel(src[i]);
    const double dx = (p[0] - q[0]) * spacing.sx;
    const double dy = (p[1] - q[1]) * spacing.sy;
    const double dz = (p[2] - q[2]) * spacing.sz;
    out[i] = static_cast<float>(std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  return out;
}

}  // namespace pulmofuse
