// Skeleton-to-graph conversion and the trunk/branch split built on it.
//
// Voxels with one skeleton neighbor are endpoints, voxels with three or more
// are junction material; 26-adjacent junction voxels collapse into a single
// node so a thick bifurcation reads as one junction. Degree-2 chains between
// nodes become edges. Pure cycles (no node voxel anywhere) get a synthetic
// node at their first raster voxel so every skeleton voxel still lands in
// exactly one node or edge.

#include <algorithm>
#include <cstdlib>
#include <queue>

#include "pulmofuse/errors.hpp"
#include "pulmofuse/morphology.hpp"

namespace pulmofuse {

namespace {

std::vector<std::size_t> skeleton_neighbors(const MaskGrid& skel, const Voxel& p) {
  std::vector<std::size_t> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        const int x = p[0] + dx, y = p[1] + dy, z = p[2] + dz;
        if (skel.in_bounds(x, y, z) && skel(x, y, z))
          out.push_back(skel.index(x, y, z));
      }
  return out;
}

}  // namespace

std::size_t CenterlineGraph::endpoint_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes)
    if (node.kind == NodeKind::endpoint) ++n;
  return n;
}

std::size_t CenterlineGraph::junction_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes)
    if (node.kind == NodeKind::junction) ++n;
  return n;
}

CenterlineGraph build_centerline_graph(const MaskGrid& skeleton,
                                       const FloatGrid& distances) {
  if (skeleton.shape() != distances.shape())
    raise(Errc::shape_mismatch, "skeleton and distance map shapes differ");
  const Shape3 s = skeleton.shape();

  std::vector<std::size_t> voxels;
  for (std::size_t i = 0; i < skeleton.size(); ++i)
    if (skeleton[i]) voxels.push_back(i);
  if (voxels.empty()) raise(Errc::empty_skeleton, "skeleton has no voxels");

  Grid3<std::uint8_t> degree(s, 0);
  for (const std::size_t i : voxels) {
    const auto nbrs = skeleton_neighbors(skeleton, skeleton.unravel(i));
    degree[i] = static_cast<std::uint8_t>(std::min<std::size_t>(nbrs.size(), 255));
  }

  CenterlineGraph graph;
  // node id per voxel, -1 = chain or unassigned
  Grid3<std::int32_t> node_of(s, -1);

  auto new_node = [&](NodeKind kind) {
    graph.nodes.push_back(CenterlineNode{kind, {}, 0.0});
    return static_cast<int>(graph.nodes.size()) - 1;
  };
  auto add_node_voxel = [&](int id, std::size_t i) {
    node_of[i] = id;
    graph.nodes[id].voxels.push_back(skeleton.unravel(i));
    graph.nodes[id].radius =
        std::max(graph.nodes[id].radius, static_cast<double>(distances[i]));
  };

  // Junction clusters first (flood over 26-adjacent degree>=3 voxels), then
  // endpoints and isolated voxels; voxels ascend in raster order so node
  // numbering is deterministic.
  for (const std::size_t i : voxels) {
    if (degree[i] < 3 || node_of[i] >= 0) continue;
    const int id = new_node(NodeKind::junction);
    std::queue<std::size_t> todo;
    todo.push(i);
    add_node_voxel(id, i);
    while (!todo.empty()) {
      const std::size_t cur = todo.front();
      todo.pop();
      for (const std::size_t nb :
           skeleton_neighbors(skeleton, skeleton.unravel(cur))) {
        if (degree[nb] >= 3 && node_of[nb] < 0) {
          add_node_voxel(id, nb);
          todo.push(nb);
        }
      }
    }
  }
  for (const std::size_t i : voxels) {
    if (node_of[i] >= 0 || degree[i] == 2) continue;
    if (degree[i] >= 3) continue;
    const int id =
        new_node(degree[i] == 0 ? NodeKind::isolated : NodeKind::endpoint);
    add_node_voxel(id, i);
  }

  // Trace chains out of every node voxel.
  Grid3<std::uint8_t> chain_done(s, 0);
  auto edge_radius = [&](const std::vector<Voxel>& chain, int a, int b) {
    if (chain.empty())
      return 0.5 * (graph.nodes[a].radius + graph.nodes[b].radius);
    double sum = 0.0;
    for (const Voxel& v : chain) sum += distances(v[0], v[1], v[2]);
    return sum / static_cast<double>(chain.size());
  };

  std::vector<std::pair<int, int>> direct_links;  // node-adjacency dedupe
  for (const std::size_t start : voxels) {
    const int a = node_of[start];
    if (a < 0) continue;
    for (const std::size_t first :
         skeleton_neighbors(skeleton, skeleton.unravel(start))) {
      if (node_of[first] >= 0) {
        // Two node voxels touch directly: zero-length edge between distinct
        // nodes, recorded once.
        const int b = node_of[first];
        if (b == a) continue;
        const std::pair<int, int> link = std::minmax(a, b);
        if (std::find(direct_links.begin(), direct_links.end(), link) !=
            direct_links.end())
          continue;
        direct_links.push_back(link);
        graph.edges.push_back(CenterlineEdge{link.first, link.second, {},
                                             edge_radius({}, a, b)});
        continue;
      }
      if (chain_done[first]) continue;

      std::vector<Voxel> chain;
      std::size_t prev = start;
      std::size_t cur = first;
      int b = -1;
      for (;;) {
        chain.push_back(skeleton.unravel(cur));
        chain_done[cur] = 1;
        const auto nbrs = skeleton_neighbors(skeleton, skeleton.unravel(cur));
        std::size_t next = cur;
        bool found = false;
        for (const std::size_t nb : nbrs) {
          if (nb == prev) continue;
          if (node_of[nb] >= 0) {
            b = node_of[nb];
            found = true;
            break;
          }
          if (degree[nb] == 2 && !chain_done[nb]) {
            next = nb;
            found = true;
          }
        }
        if (b >= 0 || !found) break;
        prev = cur;
        cur = next;
      }
      if (b < 0) b = a;  // chain loops back (cycle through a single node)
      graph.edges.push_back(CenterlineEdge{a, b, std::move(chain), 0.0});
      graph.edges.back().mean_radius =
          edge_radius(graph.edges.back().chain, a, b);
    }
  }

  // A cycle with no node voxel at all: promote its first raster voxel to a
  // node and trace the loop.
  for (const std::size_t i : voxels) {
    if (node_of[i] >= 0 || chain_done[i]) continue;
    const int id = new_node(NodeKind::junction);
    add_node_voxel(id, i);
    const auto nbrs = skeleton_neighbors(skeleton, skeleton.unravel(i));
    std::vector<Voxel> chain;
    std::size_t prev = i;
    std::size_t cur = nbrs[0];
    while (node_of[cur] < 0) {
      chain.push_back(skeleton.unravel(cur));
      chain_done[cur] = 1;
      for (const std::size_t nb :
           skeleton_neighbors(skeleton, skeleton.unravel(cur))) {
        if (nb != prev && (node_of[nb] >= 0 || !chain_done[nb])) {
          prev = cur;
          cur = nb;
          break;
        }
      }
    }
    graph.edges.push_back(CenterlineEdge{id, id, std::move(chain), 0.0});
    graph.edges.back().mean_radius =
        edge_radius(graph.edges.back().chain, id, id);
  }

  int root = 0;
  for (int i = 1; i < static_cast<int>(graph.nodes.size()); ++i)
    if (graph.nodes[i].radius > graph.nodes[root].radius) root = i;
  graph.root = root;
  return graph;
}

RegionGrid decompose_main_vs_branches(const MaskGrid& mask, Spacing3 spacing,
                                      const DecomposeParams& params) {
  const Shape3 s = mask.shape();
  const LabelMap components = connected_components(mask, params.connectivity);
  if (components.component_count() == 0)
    raise(Errc::empty_mask, "cannot decompose an empty mask");

  MaskGrid largest(s);
  for (std::size_t i = 0; i < mask.size(); ++i)
    largest[i] = components.labels[i] == 1 ? std::uint8_t{1} : std::uint8_t{0};

  const FloatGrid dist = distance_transform(largest, spacing);
  const MaskGrid skel = skeletonize(largest);
  const CenterlineGraph graph = build_centerline_graph(skel, dist);

  double r_max = 0.0;
  for (std::size_t i = 0; i < skel.size(); ++i)
    if (skel[i]) r_max = std::max(r_max, static_cast<double>(dist[i]));

  // Main = the connected run of thick edges around the root.
  const double threshold = params.alpha * r_max;
  std::vector<char> edge_main(graph.edges.size(), 0);
  std::vector<char> node_reached(graph.nodes.size(), 0);
  std::queue<int> todo;
  todo.push(graph.root);
  node_reached[graph.root] = 1;
  while (!todo.empty()) {
    const int n = todo.front();
    todo.pop();
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      if (edge_main[e] || graph.edges[e].mean_radius < threshold) continue;
      const auto& edge = graph.edges[e];
      int other = -1;
      if (edge.node_a == n) other = edge.node_b;
      else if (edge.node_b == n) other = edge.node_a;
      else continue;
      edge_main[e] = 1;
      if (!node_reached[other]) {
        node_reached[other] = 1;
        todo.push(other);
      }
    }
  }

  // Tag skeleton voxels: root voxels and everything on a main edge are main.
  Grid3<std::uint8_t> skel_region(s, 0);
  for (std::size_t i = 0; i < skel.size(); ++i)
    if (skel[i]) skel_region[i] = kRegionBranch;
  for (const Voxel& v : graph.nodes[graph.root].voxels)
    skel_region(v[0], v[1], v[2]) = kRegionMain;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    if (!edge_main[e]) continue;
    for (const Voxel& v : graph.edges[e].chain)
      skel_region(v[0], v[1], v[2]) = kRegionMain;
    for (const Voxel& v : graph.nodes[graph.edges[e].node_a].voxels)
      skel_region(v[0], v[1], v[2]) = kRegionMain;
    for (const Voxel& v : graph.nodes[graph.edges[e].node_b].voxels)
      skel_region(v[0], v[1], v[2]) = kRegionMain;
  }

  // Every voxel of the big component inherits its nearest skeleton voxel's
  // tag; detached components are branch outright.
  const Grid3<std::uint32_t> nearest = nearest_site_transform(skel, spacing);
  RegionGrid regions(s, kRegionBackground);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (components.labels[i] != 1) {
      regions[i] = kRegionBranch;
      continue;
    }
    regions[i] = skel_region[nearest[i]];
  }
  return regions;
}

}  // namespace pulmofuse
