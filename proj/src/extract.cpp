#include "deepcurrents/extract.hpp"

#include <fstream>
#include <limits>

#include <json.hpp>

#include "deepcurrents/errors.hpp"
#include "deepcurrents/mesh_io.hpp"

namespace deepcurrents {

Vec3 ScalarGrid::node(int i, int j, int k) const {
  const Vec3 step = (hi - lo).cwiseQuotient(Vec3(resolution[0] - 1, resolution[1] - 1, resolution[2] - 1));
  return lo + Vec3(i * step.x(), j * step.y(), k * step.z());
}

Eigen::Matrix3Xd ScalarGrid::nodes() const {
  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(node_count()));
  for (int k = 0; k < resolution[2]; ++k) {
    for (int j = 0; j < resolution[1]; ++j) {
      for (int i = 0; i < resolution[0]; ++i) out.col(static_cast<Eigen::Index>(index(i, j, k))) = node(i, j, k);
    }
  }
  return out;
}

namespace {

ScalarGrid make_grid(int resolution, const Vec3& lo, const Vec3& hi) {
  if (resolution < 2) throw InputError("grid resolution must be >= 2");
  ScalarGrid grid;
  grid.resolution = {resolution, resolution, resolution};
  grid.lo = lo;
  grid.hi = hi;
  return grid;
}

}  // namespace

ScalarGrid sample_function(const std::function<double(const Vec3&)>& f, int resolution, const Vec3& lo,
                           const Vec3& hi) {
  ScalarGrid grid = make_grid(resolution, lo, hi);
  grid.values.resize(grid.node_count());
  const Eigen::Matrix3Xd nodes = grid.nodes();
  for (Eigen::Index n = 0; n < nodes.cols(); ++n) grid.values[static_cast<std::size_t>(n)] = f(nodes.col(n));
  return grid;
}

ScalarGrid sample_grid(const NeuralCurrent& current, int resolution) {
  ScalarGrid grid = make_grid(resolution, Vec3::Constant(-1.0), Vec3::Constant(1.0));
  const Eigen::VectorXd values = current.field.eval_batch(grid.nodes());
  grid.values.assign(values.data(), values.data() + values.size());
  return grid;
}

double level_from_boundary(const NeuralCurrent& current) {
  if (current.boundary.empty() || current.boundary.loops.front().empty()) {
    throw InputError("level_from_boundary: the current has no boundary");
  }
  const auto& loop = current.boundary.loops.front();
  Eigen::Matrix3Xd x(3, static_cast<Eigen::Index>(loop.size()));
  for (std::size_t i = 0; i < loop.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = loop[i];
  return current.field.eval_batch(x).mean();
}

ExtractedMesh filter_boundary_vertices(const TriangleMesh& mesh, const NeuralCurrent& current, double threshold) {
  Eigen::Matrix3Xd x(3, static_cast<Eigen::Index>(mesh.vertices.size()));
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = mesh.vertices[i];
  const Eigen::Matrix3Xd omega = current_vector_batch(current, x);

  ExtractedMesh out;
  std::vector<int> remap(mesh.vertices.size(), -1);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const double magnitude = omega.col(static_cast<Eigen::Index>(i)).norm();
    if (!(magnitude >= threshold)) continue;
    remap[i] = static_cast<int>(out.mesh.vertices.size());
    out.mesh.vertices.push_back(mesh.vertices[i]);
    out.magnitudes.push_back(magnitude);
  }
  for (const auto& [a, b, c] : mesh.faces) {
    if (remap[a] < 0 || remap[b] < 0 || remap[c] < 0) continue;
    out.mesh.faces.push_back({remap[a], remap[b], remap[c]});
  }
  return out;
}

MeshFormat mesh_format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".obj") return MeshFormat::obj;
  if (ext == ".ply") return MeshFormat::ply;
  throw InputError("unsupported mesh extension '" + ext.string() + "' (expected .obj or .ply)");
}

void export_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, MeshFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (format == MeshFormat::obj) {
    write_obj(mesh, out);
  } else {
    write_ply(mesh, out);
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void export_current_grid(const NeuralCurrent& current, int resolution, const std::filesystem::path& path) {
  const ScalarGrid grid = make_grid(resolution, Vec3::Constant(-1.0), Vec3::Constant(1.0));
  const Eigen::Matrix3Xd omega = current_vector_batch(current, grid.nodes());
  const Eigen::Matrix3Xf payload = omega.cast<float>();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * static_cast<Eigen::Index>(sizeof(float))));
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());

  const nlohmann::json sidecar = {
      {"resolution", {resolution, resolution, resolution}},
      {"domain", {{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}}},
      {"channels", 3},
      {"dtype", "float32"},
      {"endianness", "little"},
      {"layout", "x-fastest, xyz interleaved per node"},
      {"alpha_scale", current.alpha_scale},
  };
  std::ofstream side(path.string() + ".json");
  if (!side) throw std::runtime_error("cannot open " + path.string() + ".json for writing");
  side << sidecar.dump(2) << '\n';
  if (!side) throw std::runtime_error("failed writing " + path.string() + ".json");
}

Extraction extract_surface(const NeuralCurrent& current, int resolution, double threshold) {
  Extraction out;
  out.level = level_from_boundary(current);
  out.level_set = marching_cubes(sample_grid(current, resolution), out.level);
  out.surface = filter_boundary_vertices(out.level_set, current, threshold);
  return out;
}

}  // namespace deepcurrents
