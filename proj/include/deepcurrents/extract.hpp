#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "deepcurrents/currents.hpp"
#include "deepcurrents/geometry.hpp"

namespace deepcurrents {

/// Values on a regular lattice, x index fastest.
struct ScalarGrid {
  std::array<int, 3> resolution{2, 2, 2};
  Vec3 lo = Vec3::Constant(-1.0);
  Vec3 hi = Vec3::Constant(1.0);
  std::vector<double> values;

  std::size_t node_count() const {
    return static_cast<std::size_t>(resolution[0]) * static_cast<std::size_t>(resolution[1]) *
           static_cast<std::size_t>(resolution[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(resolution[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(resolution[1]) * static_cast<std::size_t>(k));
  }
  Vec3 node(int i, int j, int k) const;
  /// Node positions in storage order (3 x node_count).
  Eigen::Matrix3Xd nodes() const;
};

/// Samples any scalar function of position.
ScalarGrid sample_function(const std::function<double(const Vec3&)>& f, int resolution,
                           const Vec3& lo = Vec3::Constant(-1.0), const Vec3& hi = Vec3::Constant(1.0));

/// f_theta at the lattice nodes of [-1, 1]^3.
ScalarGrid sample_grid(const NeuralCurrent& current, int resolution);

/// Mean of f over the vertices of the first boundary loop.
double level_from_boundary(const NeuralCurrent& current);

/// Triangulates {f = level}; cells with values below the level are inside,
/// faces wind so normals point toward increasing f. Vertices on shared grid
/// edges are welded.
TriangleMesh marching_cubes(const ScalarGrid& grid, double level);

struct ExtractedMesh {
  TriangleMesh mesh;
  /// |omega| at each vertex.
  std::vector<double> magnitudes;
};

/// Drops vertices with |grad f + alpha| < threshold together with their faces.
ExtractedMesh filter_boundary_vertices(const TriangleMesh& mesh, const NeuralCurrent& current, double threshold);

enum class MeshFormat { obj, ply };
MeshFormat mesh_format_from_path(const std::filesystem::path& path);

void export_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, MeshFormat format);

/// Writes omega at the nodes of a resolution^3 grid over [-1, 1]^3 as raw
/// little-endian float32 triples (x fastest) to `path`, and a JSON sidecar
/// {"resolution": [n, n, n], "domain": [[-1,-1,-1], [1,1,1]], ...} to
/// `path` + ".json".
void export_current_grid(const NeuralCurrent& current, int resolution, const std::filesystem::path& path);

/// Everything the extraction pipeline produces for one current.
struct Extraction {
  double level = 0.0;
  TriangleMesh level_set;
  ExtractedMesh surface;
};

Extraction extract_surface(const NeuralCurrent& current, int resolution, double threshold);

}  // namespace deepcurrents
