#include <doctest.h>

#include <cmath>
#include <numbers>

#include "deepcurrents/errors.hpp"
#include "deepcurrents/geometry.hpp"
#include "helpers.hpp"

namespace dc = deepcurrents;
using dc::Vec3;

namespace {

// Signed area of the xy projection of a loop.
double signed_area_xy(const std::vector<Vec3>& loop) {
  double a = 0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec3& p = loop[i];
    const Vec3& q = loop[(i + 1) % loop.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

Vec3 random_point(dc::Rng& rng, double r) { return Vec3(rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)); }

// Dense barycentric scan: an independent (approximate) closest-point oracle.
double scan_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const int n = 400;
  double best = 1e300;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const double u = double(i) / n, v = double(j) / n;
      best = std::min(best, (a + u * (b - a) + v * (c - a) - p).norm());
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("face area and normal of a right triangle") {
    dc::TriangleMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 3, 0)};
    m.faces = {{0, 1, 2}};
    CHECK(m.face_area(0) == doctest::Approx(3.0));
    CHECK((m.face_normal(0) - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK(m.area() == doctest::Approx(3.0));
    m.faces.push_back({0, 1, 7});
    CHECK_THROWS_AS(m.check_indices(), dc::InputError);
  }

  TEST_CASE("closest point on triangle agrees with a dense scan") {
    dc::Rng rng(17);
    for (int t = 0; t < 40; ++t) {
      const Vec3 a = random_point(rng, 1), b = random_point(rng, 1), c = random_point(rng, 1);
      const Vec3 p = random_point(rng, 2);
      const Vec3 q = dc::closest_point_on_triangle(p, a, b, c);
      const double scan = scan_triangle_distance(p, a, b, c);
      // The scan can only overestimate, by at most the lattice spacing.
      CHECK((q - p).norm() <= scan + 1e-12);
      CHECK((q - p).norm() >= scan - 0.01);
    }
  }

  TEST_CASE("BVH closest point matches brute force exactly") {
    const dc::TriangleMesh sphere = dc::primitives::uv_sphere(1.0, 20, 40);
    const dc::MeshAccel accel(sphere);
    dc::Rng rng(3);
    for (int i = 0; i < 500; ++i) {
      const Vec3 x = random_point(rng, 1.5);
      const auto fast = accel.closest_point(x);
      const auto slow = dc::closest_point_brute_force(sphere, x);
      CHECK(fast.distance == doctest::Approx(slow.distance).epsilon(1e-12));
      CHECK(fast.face == slow.face);
      CHECK((fast.normal - sphere.face_normal(static_cast<std::size_t>(fast.face))).norm() < 1e-15);
    }
  }

  TEST_CASE("closed primitives have outward normals and the right area") {
    const auto sphere = dc::primitives::uv_sphere(1.0, 64, 128);
    for (std::size_t f = 0; f < sphere.faces.size(); ++f) {
      const auto& [a, b, c] = sphere.faces[f];
      const Vec3 centroid = (sphere.vertices[a] + sphere.vertices[b] + sphere.vertices[c]) / 3.0;
      REQUIRE(sphere.face_normal(f).dot(centroid) > 0.0);
    }
    CHECK(sphere.area() == doctest::Approx(4 * std::numbers::pi).epsilon(2e-3));
    const auto hemi = dc::primitives::hemisphere(1.0, 32, 128);
    CHECK(hemi.area() == doctest::Approx(2 * std::numbers::pi).epsilon(2e-3));
    const int n = 96;
    const auto disk = dc::primitives::disk(1.0, 8, n);
    CHECK(disk.area() == doctest::Approx(0.5 * n * std::sin(2 * std::numbers::pi / n)).epsilon(1e-12));
    for (std::size_t f = 0; f < disk.faces.size(); ++f) REQUIRE(disk.face_normal(f).z() == doctest::Approx(1.0));
  }

  TEST_CASE("normalize_mesh centers and scales the bounding box") {
    dc::TriangleMesh m = dc::primitives::cube(Vec3(1, 2, 3), Vec3(3, 3, 7));
    const auto [norm, t] = dc::normalize_mesh(m);
    Eigen::Vector3d lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
    for (const auto& v : norm.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    CHECK((hi - lo).maxCoeff() == doctest::Approx(1.0));
    CHECK(((hi + lo) / 2).norm() < 1e-15);
    CHECK((t.invert(norm.vertices[5]) - m.vertices[5]).norm() < 1e-12);
    const auto back = dc::transform_mesh(m, t);
    CHECK((back.vertices[2] - norm.vertices[2]).norm() < 1e-15);

    dc::TriangleMesh point;
    point.vertices = {Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1)};
    point.faces = {{0, 1, 2}};
    CHECK_THROWS_AS(dc::normalize_mesh(point), dc::InputError);
  }

  TEST_CASE("boundary loops of open and closed primitives") {
    CHECK(dc::extract_boundary_loops(dc::primitives::uv_sphere(1, 8, 16)).empty());
    CHECK(dc::extract_boundary_loops(dc::primitives::cube(Vec3::Zero(), Vec3::Ones())).empty());

    const auto hemi = dc::primitives::hemisphere(1.0, 8, 32);
    const auto loops = dc::extract_boundary_loops(hemi);
    REQUIRE(loops.loops.size() == 1);
    CHECK(loops.loops[0].size() == 32);
    for (const auto& v : loops.loops[0]) CHECK(v.z() == 0.0);
    // Right-hand rule with the outward (upward) normal: counterclockwise from above.
    CHECK(signed_area_xy(loops.loops[0]) > 0.0);

    const auto disk_loops = dc::extract_boundary_loops(dc::primitives::disk(1.0, 4, 24));
    REQUIRE(disk_loops.loops.size() == 1);
    CHECK(signed_area_xy(disk_loops.loops[0]) > 0.0);

    CHECK(dc::extract_boundary_loops(dc::primitives::cylinder(1.0, 1.0, 3, 16)).loops.size() == 2);
  }

  TEST_CASE("non-manifold edges are rejected") {
    dc::TriangleMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1)};
    m.faces = {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}};
    CHECK_THROWS_AS(dc::extract_boundary_loops(m), dc::InputError);
  }

  TEST_CASE("curve generation") {
    CHECK(dc::generate_curve(dc::CurveKind::trefoil, 256, 1.0).loops.size() == 1);
    CHECK(dc::generate_curve(dc::CurveKind::trefoil, 256, 1.0).loops[0].size() == 256);
    CHECK(dc::generate_curve(dc::CurveKind::hopf, 64, 1.0).loops.size() == 2);
    CHECK(dc::generate_curve(dc::CurveKind::borromean, 64, 1.0).loops.size() == 3);
    CHECK_THROWS_AS(dc::generate_curve(dc::CurveKind::circle, 11, 1.0), dc::InputError);
    CHECK_THROWS_AS(dc::generate_curve(dc::CurveKind::circle, 64, 0.0), dc::InputError);
    CHECK_THROWS_AS(dc::parse_curve_kind("figure8"), dc::InputError);

    for (auto kind : {dc::CurveKind::circle, dc::CurveKind::trefoil, dc::CurveKind::hopf, dc::CurveKind::borromean}) {
      CAPTURE(dc::to_string(kind));
      CHECK(dc::parse_curve_kind(dc::to_string(kind)) == kind);
      const auto curve = dc::generate_curve(kind, 128, 0.8);
      curve.validate();
      double extent = 0;
      for (const auto& loop : curve.loops)
        for (const auto& v : loop) extent = std::max(extent, v.cwiseAbs().maxCoeff());
      CHECK(extent <= 0.8 + 1e-12);
      // Margin to the [-1, 1]^3 domain boundary.
      CHECK(1.0 - extent >= 0.1);
    }
    const auto circle = dc::generate_curve(dc::CurveKind::circle, 96, 1.0);
    for (const auto& v : circle.loops[0]) CHECK(v.norm() == doctest::Approx(1.0));
  }

  TEST_CASE("distance to a polygonal circle") {
    const int n = 96;
    const auto circle = dc::generate_curve(dc::CurveKind::circle, n, 1.0);
    const double apothem = std::cos(std::numbers::pi / n);
    CHECK(dc::closest_point_curve(circle, Vec3::Zero()) == doctest::Approx(apothem).epsilon(1e-12));
    CHECK(dc::closest_point_curve(circle, Vec3(0, 0, 0.5)) ==
          doctest::Approx(std::hypot(apothem, 0.5)).epsilon(1e-12));
    CHECK(dc::closest_point_curve(circle, Vec3(2, 0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("curve JSON round trip and malformed input") {
    const auto curve = dc::generate_curve(dc::CurveKind::borromean, 40, 0.7);
    const auto back = dc::curve_from_json(dc::curve_to_json(curve));
    REQUIRE(back.loops.size() == curve.loops.size());
    for (std::size_t l = 0; l < curve.loops.size(); ++l) {
      REQUIRE(back.loops[l].size() == curve.loops[l].size());
      for (std::size_t i = 0; i < curve.loops[l].size(); ++i) CHECK(back.loops[l][i] == curve.loops[l][i]);
    }
    CHECK_THROWS_AS(dc::curve_from_json("{\"loops\": [[[0,0]]]}"), dc::FormatError);
    CHECK_THROWS_AS(dc::curve_from_json("not json"), dc::FormatError);
    CHECK_THROWS_AS(dc::curve_from_json("{\"curves\": []}"), dc::FormatError);

    const auto dir = testing::scratch("curve_json");
    dc::save_curve(curve, dir / "c.json");
    CHECK(dc::load_curve(dir / "c.json").loops.size() == 3);
  }

  TEST_CASE("surface sampling is area weighted and uniform within faces") {
    // Two disjoint triangles with areas 1 and 3.
    dc::TriangleMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(5, 0, 0), Vec3(8, 0, 0), Vec3(5, 2, 0)};
    m.faces = {{0, 1, 2}, {3, 4, 5}};
    const dc::SurfaceSampler sampler(m);
    dc::Rng rng(9);
    const int n = 40000;
    int counts[2] = {0, 0};
    Vec3 mean = Vec3::Zero();
    for (int i = 0; i < n; ++i) {
      int face = -1;
      const auto s = sampler.sample(rng, &face);
      ++counts[face];
      if (face == 0) mean += s.point;
      CHECK(s.normal.z() == doctest::Approx(1.0));
    }
    const double e0 = n * 0.25, e1 = n * 0.75;
    const double chi2 = (counts[0] - e0) * (counts[0] - e0) / e0 + (counts[1] - e1) * (counts[1] - e1) / e1;
    CHECK(chi2 < 10.83);  // 1 dof, 99.9%
    mean /= counts[0];
    CHECK((mean - Vec3(1.0 / 3, 2.0 / 3, 0)).norm() < 0.02);
  }
}
