#include "deepcurrents/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "deepcurrents/errors.hpp"

namespace deepcurrents {

// ---------------------------------------------------------------------------
// TriangleMesh / BoundaryCurve

Vec3 TriangleMesh::face_cross(std::size_t f) const {
  const auto& [a, b, c] = faces[f];
  return (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]);
}

Vec3 TriangleMesh::face_normal(std::size_t f) const { return face_cross(f).normalized(); }

double TriangleMesh::face_area(std::size_t f) const { return 0.5 * face_cross(f).norm(); }

double TriangleMesh::area() const {
  double total = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) total += face_area(f);
  return total;
}

void TriangleMesh::check_indices() const {
  const auto n = static_cast<int>(vertices.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int v : faces[f]) {
      if (v < 0 || v >= n) {
        throw InputError("face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                         " but the mesh has " + std::to_string(n) + " vertices");
      }
    }
  }
}

std::size_t BoundaryCurve::segment_count() const {
  std::size_t n = 0;
  for (const auto& loop : loops) n += loop.size();
  return n;
}

void BoundaryCurve::validate() const {
  for (std::size_t l = 0; l < loops.size(); ++l) {
    const auto& loop = loops[l];
    if (loop.size() < 3) {
      throw InputError("boundary loop " + std::to_string(l) + " has fewer than 3 vertices");
    }
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec3& p = loop[i];
      const Vec3& q = loop[(i + 1) % loop.size()];
      if (!p.allFinite()) throw InputError("boundary loop " + std::to_string(l) + " has a non-finite vertex");
      if ((q - p).norm() <= 1e-9) {
        throw InputError("boundary loop " + std::to_string(l) + " has a degenerate segment at vertex " +
                         std::to_string(i));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Closest point queries

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

ClosestPoint closest_point_brute_force(const TriangleMesh& mesh, const Vec3& x) {
  double best = std::numeric_limits<double>::infinity();
  ClosestPoint out;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& [a, b, c] = mesh.faces[f];
    const Vec3 q = closest_point_on_triangle(x, mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
    const double d2 = (q - x).squaredNorm();
    if (d2 < best) {
      best = d2;
      out.point = q;
      out.face = static_cast<int>(f);
    }
  }
  if (out.face >= 0) {
    out.distance = std::sqrt(best);
    out.normal = mesh.face_normal(static_cast<std::size_t>(out.face));
  }
  return out;
}

MeshAccel::MeshAccel(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.empty()) throw InputError("cannot build a closest-point structure over an empty mesh");
  mesh_.check_indices();
  const std::size_t n = mesh_.faces.size();
  normals_.resize(n);
  std::vector<Vec3> centroids(n);
  order_.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    normals_[f] = mesh_.face_normal(f);
    const auto& [a, b, c] = mesh_.faces[f];
    centroids[f] = (mesh_.vertices[a] + mesh_.vertices[b] + mesh_.vertices[c]) / 3.0;
    order_[f] = static_cast<int>(f);
  }
  nodes_.reserve(2 * n);
  build(0, static_cast<int>(n), centroids);
}

int MeshAccel::build(int begin, int end, const std::vector<Vec3>& centroids) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d centroid_box;
  for (int i = begin; i < end; ++i) {
    for (int v : mesh_.faces[order_[i]]) box.extend(mesh_.vertices[v]);
    centroid_box.extend(centroids[order_[i]]);
  }
  nodes_[index].box = box;

  constexpr int kLeafSize = 4;
  if (end - begin <= kLeafSize) {
    nodes_[index].first = begin;
    nodes_[index].count = end - begin;
    return index;
  }
  int axis = 0;
  centroid_box.sizes().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     if (centroids[a][axis] != centroids[b][axis]) return centroids[a][axis] < centroids[b][axis];
                     return a < b;
                   });
  const int left = build(begin, mid, centroids);
  const int right = build(mid, end, centroids);
  nodes_[index].first = left;
  nodes_[index].right = right;
  return index;
}

ClosestPoint MeshAccel::closest_point(const Vec3& x) const {
  double best = std::numeric_limits<double>::infinity();
  int best_face = -1;
  Vec3 best_point = Vec3::Zero();

  std::array<int, 128> stack{};
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squaredExteriorDistance(x) > best) continue;
    if (node.count > 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = order_[i];
        const auto& [a, b, c] = mesh_.faces[f];
        const Vec3 q = closest_point_on_triangle(x, mesh_.vertices[a], mesh_.vertices[b], mesh_.vertices[c]);
        const double d2 = (q - x).squaredNorm();
        if (d2 < best || (d2 == best && f < best_face)) {
          best = d2;
          best_face = f;
          best_point = q;
        }
      }
      continue;
    }
    const double dl = nodes_[node.first].box.squaredExteriorDistance(x);
    const double dr = nodes_[node.right].box.squaredExteriorDistance(x);
    // Push the farther child first so the nearer one is visited next.
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.first;
    } else {
      stack[top++] = node.first;
      stack[top++] = node.right;
    }
  }
  return {best_point, normals_[best_face], std::sqrt(best), best_face};
}

double closest_point_curve(const BoundaryCurve& curve, const Vec3& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& loop : curve.loops) {
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& a = loop[i];
      const Vec3 ab = loop[(i + 1) % n] - a;
      const double len2 = ab.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      best = std::min(best, (a + t * ab - x).squaredNorm());
    }
  }
  return std::sqrt(best);
}

// ---------------------------------------------------------------------------
// Mesh processing

TriangleMesh transform_mesh(const TriangleMesh& mesh, const Similarity& t) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = t.apply(v);
  return out;
}

std::pair<TriangleMesh, Similarity> normalize_mesh(const TriangleMesh& mesh) {
  if (mesh.vertices.empty() || mesh.empty()) throw InputError("cannot normalize an empty mesh");
  Eigen::AlignedBox3d box;
  for (const auto& v : mesh.vertices) box.extend(v);
  const double extent = box.sizes().maxCoeff();
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw InputError("mesh bounding box has zero extent");
  }
  Similarity t;
  t.scale = 1.0 / extent;
  t.shift = -box.center() * t.scale;
  return {transform_mesh(mesh, t), t};
}

BoundaryCurve extract_boundary_loops(const TriangleMesh& mesh) {
  mesh.check_indices();
  std::map<std::pair<int, int>, int> use_count;
  for (const auto& face : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = face[k];
      const int b = face[(k + 1) % 3];
      ++use_count[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [edge, count] : use_count) {
    if (count >= 3) {
      throw InputError("non-manifold edge (" + std::to_string(edge.first) + ", " + std::to_string(edge.second) +
                       ") is shared by " + std::to_string(count) + " faces");
    }
  }

  // Boundary half-edges in face order, so loop discovery is deterministic.
  std::vector<std::pair<int, int>> half_edges;
  std::unordered_map<int, int> next;
  for (const auto& face : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = face[k];
      const int b = face[(k + 1) % 3];
      if (use_count[{std::min(a, b), std::max(a, b)}] != 1) continue;
      if (!next.emplace(a, b).second) {
        throw InputError("non-manifold boundary vertex " + std::to_string(a));
      }
      half_edges.emplace_back(a, b);
    }
  }

  BoundaryCurve curve;
  std::unordered_map<int, bool> used;
  for (const auto& [start, unused] : half_edges) {
    if (used[start]) continue;
    std::vector<Vec3> loop;
    int v = start;
    do {
      if (used[v]) throw InputError("boundary chain revisits vertex " + std::to_string(v));
      used[v] = true;
      loop.push_back(mesh.vertices[v]);
      const auto it = next.find(v);
      if (it == next.end()) throw InputError("boundary chain starting at vertex " + std::to_string(start) + " does not close");
      v = it->second;
    } while (v != start);
    curve.loops.push_back(std::move(loop));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Curves

CurveKind parse_curve_kind(std::string_view name) {
  if (name == "circle") return CurveKind::circle;
  if (name == "trefoil") return CurveKind::trefoil;
  if (name == "hopf") return CurveKind::hopf;
  if (name == "borromean") return CurveKind::borromean;
  throw InputError("unknown curve kind '" + std::string(name) + "' (expected circle, trefoil, hopf or borromean)");
}

std::string_view to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::circle: return "circle";
    case CurveKind::trefoil: return "trefoil";
    case CurveKind::hopf: return "hopf";
    case CurveKind::borromean: return "borromean";
  }
  return "unknown";
}

BoundaryCurve generate_curve(CurveKind kind, int segments, double scale) {
  if (segments < 12) throw InputError("curves need at least 12 segments");
  if (!(scale > 0.0)) throw InputError("curve scale must be positive");
  using std::cos;
  using std::sin;
  const double step = 2.0 * std::numbers::pi / segments;

  auto sample = [&](auto&& param) {
    std::vector<Vec3> loop(static_cast<std::size_t>(segments));
    for (int i = 0; i < segments; ++i) loop[static_cast<std::size_t>(i)] = scale * param(i * step);
    return loop;
  };

  BoundaryCurve curve;
  switch (kind) {
    case CurveKind::circle:
      curve.loops.push_back(sample([](double t) -> Vec3 { return Vec3(cos(t), sin(t), 0.0); }));
      break;
    case CurveKind::trefoil:
      curve.loops.push_back(sample([](double t) -> Vec3 {
        return Vec3(sin(t) + 2.0 * sin(2.0 * t), cos(t) - 2.0 * cos(2.0 * t), -sin(3.0 * t)) / 3.0;
      }));
      break;
    case CurveKind::hopf: {
      // Unit circles centered at (-1/2, 0, 0) in the xy-plane and (1/2, 0, 0)
      // in the xz-plane, shrunk by 1/1.5 so the pair spans [-1, 1] in x.
      static constexpr double shrink = 1.0 / 1.5;
      curve.loops.push_back(sample([](double t) -> Vec3 { return Vec3(cos(t) - 0.5, sin(t), 0.0) * shrink; }));
      curve.loops.push_back(sample([](double t) -> Vec3 { return Vec3(cos(t) + 0.5, 0.0, sin(t)) * shrink; }));
      break;
    }
    case CurveKind::borromean:
      curve.loops.push_back(sample([](double t) -> Vec3 { return Vec3(cos(t), 0.5 * sin(t), 0.0); }));
      curve.loops.push_back(sample([](double t) -> Vec3 { return Vec3(0.0, cos(t), 0.5 * sin(t)); }));
      curve.loops.push_back(sample([](double t) -> Vec3 { return Vec3(0.5 * sin(t), 0.0, cos(t)); }));
      break;
  }
  return curve;
}

std::string curve_to_json(const BoundaryCurve& curve) {
  nlohmann::json loops = nlohmann::json::array();
  for (const auto& loop : curve.loops) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : loop) points.push_back({p.x(), p.y(), p.z()});
    loops.push_back(std::move(points));
  }
  return nlohmann::json{{"loops", std::move(loops)}}.dump();
}

BoundaryCurve curve_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("boundary JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("loops") || !doc["loops"].is_array()) {
    throw FormatError("boundary JSON must be an object with a \"loops\" array");
  }
  BoundaryCurve curve;
  for (const auto& loop : doc["loops"]) {
    if (!loop.is_array()) throw FormatError("boundary JSON: each loop must be an array of points");
    std::vector<Vec3> points;
    for (const auto& p : loop) {
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number()) {
        throw FormatError("boundary JSON: points must be [x, y, z] number triples");
      }
      points.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
    curve.loops.push_back(std::move(points));
  }
  curve.validate();
  return curve;
}

void save_curve(const BoundaryCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << curve_to_json(curve) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

BoundaryCurve load_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open boundary file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return curve_from_json(buffer.str());
}

// ---------------------------------------------------------------------------
// Surface sampling

SurfaceSampler::SurfaceSampler(const TriangleMesh& mesh) : mesh_(&mesh) {
  if (mesh.empty()) throw InputError("cannot sample an empty mesh");
  cdf_.resize(mesh.faces.size());
  normals_.resize(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cdf_[f] = total;
    normals_[f] = mesh.face_normal(f);
  }
  if (!(total > 0.0)) throw InputError("cannot sample a mesh with zero area");
  for (auto& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

SurfaceSample SurfaceSampler::sample(Rng& rng, int* face) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto f = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                                   static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  const double r1 = std::sqrt(rng.uniform());
  const double r2 = rng.uniform();
  const auto& [a, b, c] = mesh_->faces[f];
  const Vec3 p = (1.0 - r1) * mesh_->vertices[a] + r1 * (1.0 - r2) * mesh_->vertices[b] +
                 r1 * r2 * mesh_->vertices[c];
  if (face) *face = static_cast<int>(f);
  return {p, normals_[f]};
}

std::vector<SurfaceSample> SurfaceSampler::sample(std::size_t n, Rng& rng) const {
  std::vector<SurfaceSample> out(n);
  for (auto& s : out) s = sample(rng);
  return out;
}

std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh, std::size_t n, Rng& rng) {
  return SurfaceSampler(mesh).sample(n, rng);
}

// ---------------------------------------------------------------------------
// Primitives

namespace primitives {

TriangleMesh cube(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  }
  m.faces = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
             {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return m;
}

namespace {

// Latitude rings between polar angles theta(1) .. theta(rings_count), each
// with `sectors` vertices, appended to m. Returns the index of the first ring.
int add_rings(TriangleMesh& m, int count, int sectors, auto&& position) {
  const int first = static_cast<int>(m.vertices.size());
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < sectors; ++j) m.vertices.push_back(position(i, 2.0 * std::numbers::pi * j / sectors));
  }
  return first;
}

// Quads between consecutive rings; ring i+1 lies "below" ring i in the sense
// that (ring i, ring i+1, ring i+1 next) is counterclockwise from outside.
void connect_rings(TriangleMesh& m, int first, int count, int sectors) {
  for (int i = 0; i + 1 < count; ++i) {
    for (int j = 0; j < sectors; ++j) {
      const int a = first + i * sectors + j;
      const int b = first + (i + 1) * sectors + j;
      const int c = first + (i + 1) * sectors + (j + 1) % sectors;
      const int d = first + i * sectors + (j + 1) % sectors;
      m.faces.push_back({a, b, c});
      m.faces.push_back({a, c, d});
    }
  }
}

}  // namespace

TriangleMesh uv_sphere(double radius, int rings, int sectors) {
  TriangleMesh m;
  m.vertices.emplace_back(0.0, 0.0, radius);
  const int first = add_rings(m, rings - 1, sectors, [&](int i, double phi) {
    const double theta = std::numbers::pi * (i + 1) / rings;
    return Vec3(radius * std::sin(theta) * std::cos(phi), radius * std::sin(theta) * std::sin(phi),
                radius * std::cos(theta));
  });
  const int south = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0.0, 0.0, -radius);
  for (int j = 0; j < sectors; ++j) m.faces.push_back({0, first + j, first + (j + 1) % sectors});
  connect_rings(m, first, rings - 1, sectors);
  const int last = first + (rings - 2) * sectors;
  for (int j = 0; j < sectors; ++j) m.faces.push_back({south, last + (j + 1) % sectors, last + j});
  return m;
}

TriangleMesh hemisphere(double radius, int rings, int sectors) {
  TriangleMesh m;
  m.vertices.emplace_back(0.0, 0.0, radius);
  const int first = add_rings(m, rings, sectors, [&](int i, double phi) {
    const double theta = 0.5 * std::numbers::pi * (i + 1) / rings;
    const double z = i + 1 == rings ? 0.0 : radius * std::cos(theta);
    return Vec3(radius * std::sin(theta) * std::cos(phi), radius * std::sin(theta) * std::sin(phi), z);
  });
  for (int j = 0; j < sectors; ++j) m.faces.push_back({0, first + j, first + (j + 1) % sectors});
  connect_rings(m, first, rings, sectors);
  return m;
}

TriangleMesh cylinder(double radius, double height, int rings, int sectors) {
  TriangleMesh m;
  // Top ring first so connect_rings winds outward.
  const int first = add_rings(m, rings + 1, sectors, [&](int i, double phi) {
    return Vec3(radius * std::cos(phi), radius * std::sin(phi), 0.5 * height - height * i / rings);
  });
  connect_rings(m, first, rings + 1, sectors);
  return m;
}

TriangleMesh disk(double radius, int rings, int sectors) {
  TriangleMesh m;
  m.vertices.emplace_back(0.0, 0.0, 0.0);
  const int first = add_rings(m, rings, sectors, [&](int i, double phi) {
    const double r = radius * (i + 1) / rings;
    return Vec3(r * std::cos(phi), r * std::sin(phi), 0.0);
  });
  for (int j = 0; j < sectors; ++j) m.faces.push_back({0, first + j, first + (j + 1) % sectors});
  connect_rings(m, first, rings, sectors);
  return m;
}

}  // namespace primitives

}  // namespace deepcurrents
