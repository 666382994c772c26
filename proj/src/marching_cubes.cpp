#include <algorithm>
#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "deepcurrents/extract.hpp"
#include "deepcurrents/parallel.hpp"

namespace deepcurrents {

namespace {

// Unit-cube corner offsets and the corner pairs of the 12 cube edges.
constexpr std::array<std::array<int, 3>, 8> kCorner = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

constexpr std::array<std::array<int, 2>, 12> kEdge = {{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

// Corners of each cube face, counterclockwise seen from outside the cube.
constexpr std::array<std::array<int, 4>, 6> kFace = {{
    {0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {2, 3, 7, 6}, {3, 0, 4, 7}, {1, 2, 6, 5},
}};

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e) {
    if ((kEdge[e][0] == a && kEdge[e][1] == b) || (kEdge[e][0] == b && kEdge[e][1] == a)) return e;
  }
  return -1;
}

using CaseTriangles = std::vector<std::array<int, 3>>;

// Builds the triangle list for one inside/outside configuration. On every
// face, walking counterclockwise from outside, each crossing that enters the
// inside region is joined to the next crossing that leaves it; on faces with
// two diagonal inside corners this separates the inside corners. Both cubes
// sharing a face apply the same rule, so the result is crack-free. Joined
// segments form closed polygons that are fan-triangulated, which orients
// every triangle toward the outside (larger values).
CaseTriangles triangulate_case(int mask) {
  std::array<int, 12> next;
  next.fill(-1);
  for (const auto& face : kFace) {
    std::array<int, 4> crossing{};
    std::array<bool, 4> entering{};
    int count = 0;
    for (int i = 0; i < 4; ++i) {
      const int a = face[i];
      const int b = face[(i + 1) % 4];
      const bool in_a = (mask >> a) & 1;
      const bool in_b = (mask >> b) & 1;
      if (in_a == in_b) continue;
      crossing[count] = edge_between(a, b);
      entering[count] = in_b;
      ++count;
    }
    for (int i = 0; i < count; ++i) {
      if (!entering[i]) continue;
      for (int j = 1; j < count; ++j) {
        const int k = (i + j) % count;
        if (!entering[k]) {
          next[crossing[i]] = crossing[k];
          break;
        }
      }
    }
  }

  CaseTriangles out;
  std::array<bool, 12> used{};
  for (int start = 0; start < 12; ++start) {
    if (next[start] < 0 || used[start]) continue;
    std::vector<int> loop;
    for (int e = start; !used[e]; e = next[e]) {
      used[e] = true;
      loop.push_back(e);
    }
    for (std::size_t i = 1; i + 1 < loop.size(); ++i) out.push_back({loop[0], loop[i], loop[i + 1]});
  }
  return out;
}

const std::array<CaseTriangles, 256>& case_table() {
  static const std::array<CaseTriangles, 256> table = [] {
    std::array<CaseTriangles, 256> t;
    for (int mask = 0; mask < 256; ++mask) t[mask] = triangulate_case(mask);
    return t;
  }();
  return table;
}

// Welding key: grid edges are (node, axis) with axis 0..2, grid nodes use
// axis slot 3 for crossings that land exactly on a node.
std::int64_t edge_key(std::int64_t node, int axis) { return node * 4 + axis; }

constexpr double kSnap = 1e-9;

struct SlabOutput {
  std::vector<std::array<std::int64_t, 3>> triangles;
  std::unordered_map<std::int64_t, Vec3> positions;
};

}  // namespace

TriangleMesh marching_cubes(const ScalarGrid& grid, double level) {
  const auto& table = case_table();
  const int nx = grid.resolution[0];
  const int ny = grid.resolution[1];
  const int nz = grid.resolution[2];
  const auto node_id = [&](int i, int j, int k) { return static_cast<std::int64_t>(grid.index(i, j, k)); };

  std::vector<SlabOutput> slabs(static_cast<std::size_t>(std::max(nz - 1, 0)));
  parallel_for_chunks(slabs.size(), [&](std::size_t slab) {
    SlabOutput& out = slabs[slab];
    const int k = static_cast<int>(slab);
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        std::array<double, 8> v{};
        int mask = 0;
        for (int c = 0; c < 8; ++c) {
          v[c] = grid.values[grid.index(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2])];
          if (v[c] < level) mask |= 1 << c;
        }
        const auto& tris = table[static_cast<std::size_t>(mask)];
        if (tris.empty()) continue;

        std::array<std::int64_t, 12> key{};
        for (const auto& tri : tris) {
          for (int e : tri) {
            if (key[e] != 0) continue;
            // Canonical orientation (lower node first) so that neighbouring
            // cells compute bit-identical positions for a shared edge.
            int a = kEdge[e][0];
            int b = kEdge[e][1];
            int axis = 0;
            while (kCorner[a][axis] == kCorner[b][axis]) ++axis;
            if (kCorner[a][axis] > kCorner[b][axis]) std::swap(a, b);
            const auto& ca = kCorner[a];
            const auto& cb = kCorner[b];
            const double t = (level - v[a]) / (v[b] - v[a]);
            std::int64_t id;
            Vec3 p;
            if (t <= kSnap) {
              id = edge_key(node_id(i + ca[0], j + ca[1], k + ca[2]), 3);
              p = grid.node(i + ca[0], j + ca[1], k + ca[2]);
            } else if (t >= 1.0 - kSnap) {
              id = edge_key(node_id(i + cb[0], j + cb[1], k + cb[2]), 3);
              p = grid.node(i + cb[0], j + cb[1], k + cb[2]);
            } else {
              id = edge_key(node_id(i + ca[0], j + ca[1], k + ca[2]), axis);
              const Vec3 pa = grid.node(i + ca[0], j + ca[1], k + ca[2]);
              const Vec3 pb = grid.node(i + cb[0], j + cb[1], k + cb[2]);
              p = pa + t * (pb - pa);
            }
            key[e] = id + 1;  // 0 marks "not computed"
            out.positions.emplace(id, p);
          }
          const std::array<std::int64_t, 3> ids = {key[tri[0]] - 1, key[tri[1]] - 1, key[tri[2]] - 1};
          if (ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2]) continue;
          out.triangles.push_back(ids);
        }
      }
    }
  });

  TriangleMesh mesh;
  std::unordered_map<std::int64_t, int> index;
  for (const auto& slab : slabs) {
    for (const auto& tri : slab.triangles) {
      Face face{};
      for (int c = 0; c < 3; ++c) {
        const auto [it, inserted] = index.emplace(tri[c], static_cast<int>(mesh.vertices.size()));
        if (inserted) mesh.vertices.push_back(slab.positions.at(tri[c]));
        face[c] = it->second;
      }
      mesh.faces.push_back(face);
    }
  }
  return mesh;
}

}  // namespace deepcurrents
