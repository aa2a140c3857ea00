// Sequential 6-subiteration thinning. A voxel may be deleted only when it is
// a border voxel of the current face direction, keeps more than one skeleton
// neighbor (endpoints survive), and is a simple point: deleting it changes
// neither the foreground 26-connectivity nor the background 6-connectivity
// of its 3x3x3 neighborhood (Malandain-Bertrand characterization). Candidates
// are gathered per subiteration and deleted one by one in raster order with
// the simplicity test rechecked, which keeps the result deterministic and
// the object topology intact.

#include <array>
#include <cstdlib>

#include "pulmofuse/errors.hpp"
#include "pulmofuse/morphology.hpp"

namespace pulmofuse {

namespace {

// 27-cell neighborhood, index = (dx+1) + 3*(dy+1) + 9*(dz+1).
using Cube = std::array<bool, 27>;

constexpr int kCenter = 13;

inline int cube_index(int dx, int dy, int dz) {
  return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1);
}

Cube gather(const MaskGrid& g, int x, int y, int z) {
  Cube c{};
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy, nz = z + dz;
        c[cube_index(dx, dy, dz)] =
            g.in_bounds(nx, ny, nz) && g(nx, ny, nz) != 0;
      }
  return c;
}

int foreground_neighbor_count(const Cube& c) {
  int n = 0;
  for (int i = 0; i < 27; ++i)
    if (i != kCenter && c[i]) ++n;
  return n;
}

struct CellPos {
  int dx, dy, dz;
};

inline CellPos cell_pos(int i) {
  return {i % 3 - 1, (i / 3) % 3 - 1, i / 9 - 1};
}

// Number of 26-connected components of the foreground within the
// 26-neighborhood (center excluded).
int fg_components_26(const Cube& c) {
  std::array<int, 27> comp{};
  comp.fill(-1);
  int count = 0;
  std::array<int, 27> stack;
  for (int seed = 0; seed < 27; ++seed) {
    if (seed == kCenter || !c[seed] || comp[seed] >= 0) continue;
    ++count;
    int top = 0;
    stack[top++] = seed;
    comp[seed] = count;
    while (top > 0) {
      const int cur = stack[--top];
      const CellPos p = cell_pos(cur);
      for (int i = 0; i < 27; ++i) {
        if (i == kCenter || !c[i] || comp[i] >= 0) continue;
        const CellPos q = cell_pos(i);
        if (std::abs(p.dx - q.dx) <= 1 && std::abs(p.dy - q.dy) <= 1 &&
            std::abs(p.dz - q.dz) <= 1) {
          comp[i] = count;
          stack[top++] = i;
        }
      }
    }
  }
  return count;
}

// Number of 6-connected background components within the 18-neighborhood
// that touch a face neighbor of the center.
int bg_components_6(const Cube& c) {
  auto in_n18 = [](int i) {
    const CellPos p = cell_pos(i);
    const int m = std::abs(p.dx) + std::abs(p.dy) + std::abs(p.dz);
    return m == 1 || m == 2;
  };

  std::array<int, 27> comp{};
  comp.fill(-1);
  int count = 0;
  std::array<int, 27> stack;
  for (int seed = 0; seed < 27; ++seed) {
    // Seed only from face neighbors so every counted component is
    // 6-adjacent to the center.
    const CellPos sp = cell_pos(seed);
    if (std::abs(sp.dx) + std::abs(sp.dy) + std::abs(sp.dz) != 1) continue;
    if (c[seed] || comp[seed] >= 0) continue;
    ++count;
    int top = 0;
    stack[top++] = seed;
    comp[seed] = count;
    while (top > 0) {
      const int cur = stack[--top];
      const CellPos p = cell_pos(cur);
      for (int i = 0; i < 27; ++i) {
        if (i == kCenter || c[i] || comp[i] >= 0 || !in_n18(i)) continue;
        const CellPos q = cell_pos(i);
        if (std::abs(p.dx - q.dx) + std::abs(p.dy - q.dy) +
                std::abs(p.dz - q.dz) == 1) {
          comp[i] = count;
          stack[top++] = i;
        }
      }
    }
  }
  return count;
}

bool is_simple(const Cube& c) {
  return fg_components_26(c) == 1 && bg_components_6(c) == 1;
}

}  // namespace

MaskGrid skeletonize(const MaskGrid& mask) {
  const LabelMap components = connected_components(mask, Connectivity::twenty_six);
  if (components.component_count() == 0)
    raise(Errc::empty_mask, "cannot skeletonize an empty mask");
  if (components.component_count() > 1)
    raise(Errc::not_single_component,
          "mask has " + std::to_string(components.component_count()) +
              " components; skeletonize expects one");

  MaskGrid skel = mask;
  const Shape3 s = skel.shape();

  static constexpr std::array<std::array<int, 3>, 6> kDirections{{
      {0, 0, -1}, {0, 0, 1}, {0, -1, 0}, {0, 1, 0}, {-1, 0, 0}, {1, 0, 0},
  }};

  std::vector<std::size_t> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& d : kDirections) {
      candidates.clear();
      for (int z = 0; z < s.nz; ++z)
        for (int y = 0; y < s.ny; ++y)
          for (int x = 0; x < s.nx; ++x) {
            if (!skel(x, y, z)) continue;
            const int bx = x + d[0], by = y + d[1], bz = z + d[2];
            const bool border =
                !skel.in_bounds(bx, by, bz) || skel(bx, by, bz) == 0;
            if (!border) continue;
            const Cube c = gather(skel, x, y, z);
            if (foreground_neighbor_count(c) <= 1) continue;  // endpoint
            if (is_simple(c)) candidates.push_back(skel.index(x, y, z));
          }

      for (const std::size_t i : candidates) {
        const Voxel p = skel.unravel(i);
        const Cube c = gather(skel, p[0], p[1], p[2]);
        if (foreground_neighbor_count(c) <= 1) continue;
        if (!is_simple(c)) continue;  // earlier deletions changed the picture
        skel[i] = 0;
        changed = true;
      }
    }
  }
  return skel;
}

}  // namespace pulmofuse
