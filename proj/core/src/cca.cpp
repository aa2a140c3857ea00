// Two-pass connected-component labeling with union-find, then a
// canonicalization pass that renumbers components by decreasing size
// (ties: first voxel in raster order) so the labeling is schedule-free.

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "pulmofuse/errors.hpp"
#include "pulmofuse/morphology.hpp"

namespace pulmofuse {

namespace {

struct Offset {
  int dx, dy, dz;
};

// Neighbors already visited in a (z, y, x) raster scan.
std::vector<Offset> backward_offsets(Connectivity conn) {
  std::vector<Offset> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int order = dx + 3 * dy + 9 * dz;
        if (order >= 0) continue;  // self and forward neighbors
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (conn == Connectivity::six && manhattan != 1) continue;
        if (conn == Connectivity::eighteen && manhattan > 2) continue;
        out.push_back({dx, dy, dz});
      }
  return out;
}

class UnionFind {
 public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return static_cast<std::uint32_t>(parent_.size() - 1);
  }

  std::uint32_t find(std::uint32_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];  // path halving
      a = parent_[a];
    }
    return a;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a; else parent_[a] = b;
  }

  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

LabelMap connected_components(const MaskGrid& mask, Connectivity conn) {
  const Shape3 s = mask.shape();
  LabelMap out;
  out.labels = Grid3<std::uint32_t>(s, 0);
  if (s.count() == 0) return out;

  const auto offsets = backward_offsets(conn);
  UnionFind uf;
  uf.make();  // provisional label 0 = background, never united

  // Pass 1: provisional labels.
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        if (!mask(x, y, z)) continue;
        std::uint32_t label = 0;
        for (const Offset& o : offsets) {
          const int nx = x + o.dx, ny = y + o.dy, nz = z + o.dz;
          if (!mask.in_bounds(nx, ny, nz)) continue;
          const std::uint32_t nl = out.labels(nx, ny, nz);
          if (nl == 0) continue;
          if (label == 0) label = nl;
          else uf.unite(label, nl);
        }
        if (label == 0) label = uf.make();
        out.labels(x, y, z) = label;
      }

  // Pass 2a: per-root size and first raster voxel.
  std::vector<std::uint64_t> root_size(uf.size(), 0);
  std::vector<std::uint64_t> root_first(uf.size(),
                                        std::numeric_limits<std::uint64_t>::max());
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    const std::uint32_t l = out.labels[i];
    if (l == 0) continue;
    // (z, y, x) raster order equals flat index order in x-fastest storage.
    const std::uint32_t r = uf.find(l);
    ++root_size[r];
    root_first[r] = std::min<std::uint64_t>(root_first[r], i);
  }

  std::vector<std::uint32_t> roots;
  for (std::uint32_t r = 1; r < uf.size(); ++r)
    if (root_size[r] > 0) roots.push_back(r);
  std::sort(roots.begin(), roots.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (root_size[a] != root_size[b]) return root_size[a] > root_size[b];
    return root_first[a] < root_first[b];
  });

  std::vector<std::uint32_t> canonical(uf.size(), 0);
  out.sizes.resize(roots.size());
  for (std::uint32_t k = 0; k < roots.size(); ++k) {
    canonical[roots[k]] = k + 1;
    out.sizes[k] = root_size[roots[k]];
  }

  // Pass 2b: relabel.
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    const std::uint32_t l = out.labels[i];
    if (l != 0) out.labels[i] = canonical[uf.find(l)];
  }
  return out;
}

MaskGrid largest_component(const MaskGrid& mask, Connectivity conn) {
  const LabelMap lm = connected_components(mask, conn);
  if (lm.component_count() == 0)
    raise(Errc::empty_mask, "mask has no foreground voxels");
  MaskGrid out(mask.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = lm.labels[i] == 1 ? std::uint8_t{1} : std::uint8_t{0};
  return out;
}

}  // namespace pulmofuse
