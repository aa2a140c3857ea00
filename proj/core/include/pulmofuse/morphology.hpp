#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pulmofuse/grid.hpp"

namespace pulmofuse {

enum class Connectivity : int { six = 6, eighteen = 18, twenty_six = 26 };

// Labels are 1..K, ordered by decreasing component size; ties go to the
// component whose first voxel in (z, y, x) raster order comes first.
struct LabelMap {
  Grid3<std::uint32_t> labels;
  std::vector<std::uint64_t> sizes;  // sizes[k-1] = voxel count of label k

  std::uint32_t component_count() const {
    return static_cast<std::uint32_t>(sizes.size());
  }
};

LabelMap connected_components(const MaskGrid& mask,
                              Connectivity conn = Connectivity::twenty_six);

MaskGrid largest_component(const MaskGrid& mask,
                           Connectivity conn = Connectivity::twenty_six);

inline constexpr std::uint32_t kNoSite =
    std::numeric_limits<std::uint32_t>::max();

// For every voxel, the flat index of the nearest site voxel (exact Euclidean,
// anisotropic spacing respected). Voxels are their own nearest site when they
// are sites. kNoSite when the grid holds no sites at all.
Grid3<std::uint32_t> nearest_site_transform(const MaskGrid& sites,
                                            Spacing3 spacing);

// Exact Euclidean distance (mm) from each foreground voxel to the nearest
// background voxel; 0 on background. +inf when no background exists.
FloatGrid distance_transform(const MaskGrid& mask, Spacing3 spacing);

// Topology-preserving thinning down to a 1-voxel-wide centerline. Each pass
// runs 6 sub-iterations by face direction; deletions are sequential with
// simplicity rechecked, so the result is deterministic. Endpoints (voxels
// with a single skeleton neighbor) are never deleted.
MaskGrid skeletonize(const MaskGrid& mask);

enum class NodeKind : std::uint8_t { endpoint, junction, isolated };

struct CenterlineNode {
  NodeKind kind = NodeKind::endpoint;
  std::vector<Voxel> voxels;  // adjacent junction voxels fold into one node
  double radius = 0.0;        // max distance-map value over the node voxels
};

struct CenterlineEdge {
  int node_a = -1;
  int node_b = -1;
  std::vector<Voxel> chain;  // degree-2 voxels between the nodes, in order
  double mean_radius = 0.0;
};

struct CenterlineGraph {
  std::vector<CenterlineNode> nodes;
  std::vector<CenterlineEdge> edges;
  int root = -1;  // node with the globally maximal radius

  std::size_t endpoint_count() const;
  std::size_t junction_count() const;
};

// Skeleton voxels with >= 3 skeleton neighbors become junctions, with exactly
// one become endpoints; the chains between them become edges carrying
// per-voxel radius from `distances`.
CenterlineGraph build_centerline_graph(const MaskGrid& skeleton,
                                       const FloatGrid& distances);

struct DecomposeParams {
  double alpha = 0.5;  // main = edges with mean radius >= alpha * r_max
  Connectivity connectivity = Connectivity::twenty_six;
};

// Splits an artery mask into main trunk (1) vs branches (2). The main region
// is the connected edge subgraph around the maximal-radius root whose edges
// stay thick (mean radius >= alpha * r_max); every mask voxel then inherits
// the tag of its nearest skeleton voxel. Detached secondary components are
// branch by definition.
RegionGrid decompose_main_vs_branches(const MaskGrid& mask, Spacing3 spacing,
                                      const DecomposeParams& params = {});

}  // namespace pulmofuse
