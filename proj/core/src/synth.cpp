#include "pulmofuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pulmofuse/errors.hpp"

namespace pulmofuse {

namespace {

using Point = std::array<double, 3>;

double dot(const Point& a, const Point& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Point sub(const Point& a, const Point& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

// Distance from p to segment ab, plus the interpolated tube radius at the
// closest parameter.
struct SegmentHit {
  double dist;
  double radius;
};

SegmentHit closest_on_segment(const Point& p, const Point& a, const Point& b,
                              double ra, double rb) {
  const Point ab = sub(b, a);
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(sub(p, a), ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Point c{a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]};
  const Point d = sub(p, c);
  return {std::sqrt(dot(d, d)), ra + t * (rb - ra)};
}

bool inside_tube(const TubeSpec& tube, const Point& p) {
  for (std::size_t i = 0; i + 1 < tube.polyline.size(); ++i) {
    const SegmentHit hit =
        closest_on_segment(p, tube.polyline[i], tube.polyline[i + 1],
                           tube.radius_mm[i], tube.radius_mm[i + 1]);
    if (hit.dist <= hit.radius) return true;
  }
  return false;
}

double distance_to_polyline(const TubeSpec& tube, const Point& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < tube.polyline.size(); ++i)
    best = std::min(best, closest_on_segment(p, tube.polyline[i],
                                             tube.polyline[i + 1], 0, 0)
                              .dist);
  return best;
}

// Uniform double in [0, 1) from the top 53 bits; stable across platforms.
double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double next_gaussian(std::mt19937_64& rng) {
  // Box-Muller; two uniforms per call keeps the stream layout fixed.
  double u1 = next_uniform(rng);
  const double u2 = next_uniform(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi_v<double> * u2);
}

}  // namespace

void TubeSpec::validate() const {
  if (polyline.size() < 2)
    raise(Errc::invalid_spec, "tube needs at least 2 polyline points");
  if (radius_mm.size() != polyline.size())
    raise(Errc::invalid_spec, "one radius per polyline point required");
  for (double r : radius_mm)
    if (!(r > 0.0)) raise(Errc::invalid_spec, "tube radii must be positive");
}

void PhantomSpec::validate() const {
  if (shape.nx < 1 || shape.ny < 1 || shape.nz < 1)
    raise(Errc::invalid_spec, "phantom shape must be positive");
  if (!(spacing.sx > 0 && spacing.sy > 0 && spacing.sz > 0))
    raise(Errc::invalid_spec, "phantom spacing must be positive");
  if (!(vessel_hu > background_hu))
    raise(Errc::invalid_spec, "vessel_hu must exceed background_hu");
  trunk.validate();
  for (const TubeSpec& b : branches) {
    b.validate();
    if (distance_to_polyline(trunk, b.polyline.front()) > 1e-6)
      raise(Errc::invalid_spec, "branch start must lie on the trunk polyline");
  }

  const double ext_x = (shape.nx - 1) * spacing.sx;
  const double ext_y = (shape.ny - 1) * spacing.sy;
  const double ext_z = (shape.nz - 1) * spacing.sz;
  auto check_tube = [&](const TubeSpec& t) {
    for (std::size_t i = 0; i < t.polyline.size(); ++i) {
      const Point& p = t.polyline[i];
      const double r = t.radius_mm[i];
      if (p[0] - r < 0 || p[1] - r < 0 || p[2] - r < 0 || p[0] + r > ext_x ||
          p[1] + r > ext_y || p[2] + r > ext_z)
        raise(Errc::tube_out_of_bounds,
              "tube leaves the phantom volume (point " + std::to_string(i) +
                  ")");
    }
  };
  check_tube(trunk);
  for (const TubeSpec& b : branches) check_tube(b);
}

double PhantomSpec::tube_volume_mm3(const TubeSpec& tube) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < tube.polyline.size(); ++i) {
    const Point d = sub(tube.polyline[i + 1], tube.polyline[i]);
    const double len = std::sqrt(dot(d, d));
    const double r = 0.5 * (tube.radius_mm[i] + tube.radius_mm[i + 1]);
    total += std::numbers::pi_v<double> * r * r * len;
  }
  return total;
}

Phantom rasterize_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Shape3 s = spec.shape;

  Phantom out;
  out.geometry.spacing = spec.spacing;
  out.geometry.affine = spacing_affine(spec.spacing);
  out.mask = MaskGrid(s);
  out.regions = RegionGrid(s, kRegionBackground);
  FloatGrid hu(s, static_cast<float>(spec.background_hu));

  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const Point p{x * spec.spacing.sx, y * spec.spacing.sy,
                      z * spec.spacing.sz};
        const bool in_trunk = inside_tube(spec.trunk, p);
        bool in_branch = false;
        if (!in_trunk) {
          for (const TubeSpec& b : spec.branches)
            if (inside_tube(b, p)) {
              in_branch = true;
              break;
            }
        }
        if (!in_trunk && !in_branch) continue;
        const std::size_t i = out.mask.index(x, y, z);
        out.mask[i] = 1;
        out.regions[i] = in_trunk ? kRegionMain : kRegionBranch;
        hu[i] = static_cast<float>(spec.vessel_hu);
      }

  if (spec.noise_sigma_hu > 0.0) {
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = 0; i < hu.size(); ++i)
      hu[i] = static_cast<float>(hu[i] +
                                 spec.noise_sigma_hu * next_gaussian(rng));
  }
  out.hu = Volume(std::move(hu), out.geometry);
  return out;
}

PhantomSpec phantom_preset(std::string_view name, std::uint64_t seed) {
  PhantomSpec spec;
  spec.seed = seed;
  spec.noise_sigma_hu = 20.0;
  if (name == "cylinder") {
    spec.shape = Shape3{24, 24, 48};
    spec.spacing = Spacing3{1.0, 1.0, 1.0};
    // Slightly off lattice so voxelized cross-sections average out to the
    // analytic disk area.
    spec.trunk.polyline = {{11.63, 11.41, 4.0}, {11.63, 11.41, 44.0}};
    spec.trunk.radius_mm = {3.0, 3.0};
  } else if (name == "y-bifurcation") {
    spec.shape = Shape3{64, 64, 72};
    spec.spacing = Spacing3{1.0, 1.0, 1.0};
    // Branches leave the trunk's spherical end cap tilted in both x and y;
    // a lattice-aligned thin tube would quantize badly.
    spec.trunk.polyline = {{31.7, 31.37, 5.0}, {31.7, 31.37, 37.0}};
    spec.trunk.radius_mm = {4.0, 4.0};
    const double tilt = 40.0 * std::numbers::pi_v<double> / 180.0;
    const double yaw = 14.0 * std::numbers::pi_v<double> / 180.0;
    const double len = 26.0;
    const double dr = len * std::sin(tilt);
    const double dz = len * std::cos(tilt);
    TubeSpec left;
    left.polyline = {{31.7, 31.37, 37.0},
                     {31.7 - dr * std::cos(yaw), 31.37 + dr * std::sin(yaw),
                      37.0 + dz}};
    left.radius_mm = {1.5, 1.5};
    TubeSpec right;
    right.polyline = {{31.7, 31.37, 37.0},
                      {31.7 + dr * std::cos(yaw), 31.37 - dr * std::sin(yaw),
                       37.0 + dz}};
    right.radius_mm = {1.5, 1.5};
    spec.branches = {left, right};
  } else {
    raise(Errc::invalid_spec,
          "unknown phantom preset '" + std::string(name) + "'");
  }
  return spec;
}

std::vector<std::string_view> phantom_preset_names() {
  return {"cylinder", "y-bifurcation"};
}

FloatGrid mock_predict(const MaskGrid& gt, const MockCorruption& corruption,
                       std::uint64_t seed) {
  const Shape3 s = gt.shape();
  FloatGrid out(s);
  if (corruption.boundary_flip_prob == 0.0 &&
      corruption.detach_blob_count == 0) {
    for (std::size_t i = 0; i < gt.size(); ++i)
      out[i] = gt[i] ? 1.0f : 0.0f;
    return out;
  }

  std::mt19937_64 rng(seed);
  MaskGrid work = gt;

  static constexpr std::array<std::array<int, 3>, 6> kFaces{{
      {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1},
  }};
  auto is_boundary = [&](const MaskGrid& g, int x, int y, int z) {
    const bool fg = g(x, y, z) != 0;
    for (const auto& d : kFaces) {
      const int nx = x + d[0], ny = y + d[1], nz = z + d[2];
      const bool nb_fg = g.in_bounds(nx, ny, nz) && g(nx, ny, nz) != 0;
      if (nb_fg != fg) return true;
    }
    return false;
  };

  if (corruption.boundary_flip_prob > 0.0) {
    const MaskGrid before = work;
    for (int z = 0; z < s.nz; ++z)
      for (int y = 0; y < s.ny; ++y)
        for (int x = 0; x < s.nx; ++x)
          if (is_boundary(before, x, y, z) &&
              next_uniform(rng) < corruption.boundary_flip_prob)
            work(x, y, z) ^= 1;
  }

  for (int blob = 0; blob < corruption.detach_blob_count; ++blob) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const int cx = static_cast<int>(rng() % static_cast<std::uint64_t>(s.nx));
      const int cy = static_cast<int>(rng() % static_cast<std::uint64_t>(s.ny));
      const int cz = static_cast<int>(rng() % static_cast<std::uint64_t>(s.nz));
      // Demand clear background around the blob so it stays detached.
      bool clear = true;
      for (int dz = -3; dz <= 3 && clear; ++dz)
        for (int dy = -3; dy <= 3 && clear; ++dy)
          for (int dx = -3; dx <= 3 && clear; ++dx) {
            const int x = cx + dx, y = cy + dy, z = cz + dz;
            if (!work.in_bounds(x, y, z) || work(x, y, z)) clear = false;
          }
      if (!clear) continue;
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if (dx * dx + dy * dy + dz * dz <= 2)
              work(cx + dx, cy + dy, cz + dz) = 1;
      break;
    }
  }

  // Soft edges: 0.4 center + 0.1 per face neighbor keeps solid interiors at
  // 1.0 and ramps the surface into (0, 1).
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        double acc = 0.4 * work(x, y, z);
        for (const auto& d : kFaces) {
          const int nx = x + d[0], ny = y + d[1], nz = z + d[2];
          if (work.in_bounds(nx, ny, nz)) acc += 0.1 * work(nx, ny, nz);
        }
        out(x, y, z) = static_cast<float>(acc);
      }
  return out;
}

std::vector<FloatGrid> mock_prediction_suite(const MaskGrid& gt, int count,
                                             std::uint64_t base_seed) {
  std::vector<FloatGrid> preds;
  preds.reserve(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    MockCorruption c;
    c.boundary_flip_prob = 0.10 + 0.02 * m;
    c.detach_blob_count = m % 3;
    preds.push_back(mock_predict(gt, c, base_seed * 1000 + m));
  }
  return preds;
}

}  // namespace pulmofuse
