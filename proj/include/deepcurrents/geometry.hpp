#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "deepcurrents/rng.hpp"

namespace deepcurrents {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

/// Triangle soup with shared vertices. Counterclockwise winding defines the
/// outward normal.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }

  /// Unnormalized normal (twice the area vector).
  Vec3 face_cross(std::size_t f) const;
  Vec3 face_normal(std::size_t f) const;
  double face_area(std::size_t f) const;
  double area() const;

  /// Throws InputError when a face index is out of range.
  void check_indices() const;
};

/// Closed polygonal loops. Loop i connects loops[i].back() to loops[i].front().
struct BoundaryCurve {
  std::vector<std::vector<Vec3>> loops;

  bool empty() const { return loops.empty(); }
  std::size_t segment_count() const;

  /// Every loop has at least 3 vertices and all segments are longer than 1e-9.
  void validate() const;
};

/// x -> scale * x + shift.
struct Similarity {
  double scale = 1.0;
  Vec3 shift = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * p + shift; }
  Vec3 invert(const Vec3& p) const { return (p - shift) / scale; }
};

struct ClosestPoint {
  Vec3 point;
  Vec3 normal;
  double distance = 0.0;
  int face = -1;
};

/// Bounding-volume hierarchy over the faces of a mesh. Immutable once built,
/// so queries may run concurrently.
class MeshAccel {
 public:
  explicit MeshAccel(TriangleMesh mesh);

  const TriangleMesh& mesh() const { return mesh_; }

  /// Exact closest point over all faces. Ties go to the lowest face index.
  ClosestPoint closest_point(const Vec3& x) const;

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int first = 0;  // leaf: offset into order_; inner: left child
    int count = 0;  // leaf: number of faces; inner: 0
    int right = -1;
  };

  int build(int begin, int end, const std::vector<Vec3>& centroids);

  TriangleMesh mesh_;
  std::vector<Vec3> normals_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

/// Closest point on triangle (a, b, c) to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Reference scan over every face; same tie-breaking as MeshAccel.
ClosestPoint closest_point_brute_force(const TriangleMesh& mesh, const Vec3& x);

struct MeshLoadStats {
  std::size_t vertex_count = 0;
  std::size_t face_count = 0;
  std::size_t dropped_faces = 0;
  std::vector<std::string> warnings;
};

/// Reads an ASCII OBJ (v/f records, 1-based or negative indices, polygons
/// fan-triangulated). Zero-area faces are dropped with a warning. A `.ply`
/// extension reads the binary little-endian PLY written by export_mesh.
TriangleMesh load_mesh(const std::filesystem::path& path, MeshLoadStats* stats = nullptr);

/// Parses OBJ text; `source` is only used in error messages.
TriangleMesh parse_obj(std::string_view text, MeshLoadStats* stats = nullptr,
                       std::string_view source = "<memory>");

/// Centers the bounding box at the origin and scales uniformly so that the
/// longest side has length 1.
std::pair<TriangleMesh, Similarity> normalize_mesh(const TriangleMesh& mesh);

TriangleMesh transform_mesh(const TriangleMesh& mesh, const Similarity& t);

/// Chains once-used edges into closed loops. Loops follow the half-edge
/// direction of their face, so face normal and loop orientation obey the
/// right-hand rule.
BoundaryCurve extract_boundary_loops(const TriangleMesh& mesh);

enum class CurveKind { circle, trefoil, hopf, borromean };

CurveKind parse_curve_kind(std::string_view name);
std::string_view to_string(CurveKind kind);

/// Polygonal sampling of a canonical curve whose coordinates lie in [-1, 1],
/// multiplied by `scale`. Each loop gets `segments` vertices.
BoundaryCurve generate_curve(CurveKind kind, int segments, double scale);

/// Euclidean distance from x to the nearest segment of any loop.
double closest_point_curve(const BoundaryCurve& curve, const Vec3& x);

/// {"loops": [[[x,y,z], ...], ...]}
std::string curve_to_json(const BoundaryCurve& curve);
BoundaryCurve curve_from_json(std::string_view text);
void save_curve(const BoundaryCurve& curve, const std::filesystem::path& path);
BoundaryCurve load_curve(const std::filesystem::path& path);

struct SurfaceSample {
  Vec3 point;
  Vec3 normal;
};

/// Area-weighted face choice, uniform barycentric point within the face.
class SurfaceSampler {
 public:
  explicit SurfaceSampler(const TriangleMesh& mesh);

  /// `face`, when given, receives the index of the chosen face.
  SurfaceSample sample(Rng& rng, int* face = nullptr) const;
  std::vector<SurfaceSample> sample(std::size_t n, Rng& rng) const;

 private:
  const TriangleMesh* mesh_;
  std::vector<double> cdf_;
  std::vector<Vec3> normals_;
};

std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh, std::size_t n, Rng& rng);

/// Test and demo shapes.
namespace primitives {
TriangleMesh cube(const Vec3& lo, const Vec3& hi);
TriangleMesh uv_sphere(double radius, int rings, int sectors);
/// Upper half (z >= 0) of a sphere, open along the equator.
TriangleMesh hemisphere(double radius, int rings, int sectors);
/// Open cylinder along z without caps.
TriangleMesh cylinder(double radius, double height, int rings, int sectors);
/// Triangulated disk in the z = 0 plane, normal +z.
TriangleMesh disk(double radius, int rings, int sectors);
}  // namespace primitives

}  // namespace deepcurrents
