#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "deepcurrents/currents.hpp"
#include "deepcurrents/errors.hpp"
#include "deepcurrents/parallel.hpp"
#include "helpers.hpp"

namespace dc = deepcurrents;
using dc::Vec3;
using testing::rel_error;

namespace {

// Composite Simpson rule for the line integral of dl x r / |r|^3 with
// r = y - x over every segment: an independent oracle for the closed form.
Vec3 quadrature_field(const dc::BoundaryCurve& curve, const Vec3& x, int n) {
  Vec3 total = Vec3::Zero();
  for (const auto& loop : curve.loops) {
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec3 a = loop[i], b = loop[(i + 1) % loop.size()];
      const Vec3 dl = b - a;
      auto integrand = [&](double s) {
        const Vec3 r = a + s * dl - x;
        return Vec3(dl.cross(r) / std::pow(r.norm(), 3));
      };
      Vec3 sum = integrand(0) + integrand(1);
      for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * integrand(double(k) / n);
      total += sum / (3.0 * n);
    }
  }
  return total;
}

Eigen::Matrix3Xd random_points(int n, dc::Rng& rng, double r = 1.0) {
  Eigen::Matrix3Xd x(3, n);
  for (int i = 0; i < n; ++i) x.col(i) = Vec3(rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r));
  return x;
}

dc::NeuralCurrent tiny_current(std::uint64_t seed = 1) {
  return {dc::NeuralField::init(testing::tiny_config(seed)), dc::generate_curve(dc::CurveKind::circle, 24, 0.5),
          1e-3};
}

std::shared_ptr<const dc::MeshAccel> hemisphere_target() {
  auto target = dc::normalize_mesh(dc::primitives::hemisphere(1.0, 12, 32)).first;
  return std::make_shared<const dc::MeshAccel>(target);
}

}  // namespace

TEST_SUITE("currents") {
  TEST_CASE("closed form agrees with quadrature") {
    dc::Rng rng(4);
    dc::BoundaryCurve tri;
    tri.loops.push_back({Vec3(-0.5, -0.3, 0.1), Vec3(0.6, -0.2, -0.1), Vec3(0.0, 0.5, 0.2)});
    const dc::BiotSavart alpha(tri);
    int checked = 0;
    while (checked < 30) {
      const Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      if (dc::closest_point_curve(tri, x) < 0.1) continue;
      const Vec3 q = quadrature_field(tri, x, 20000);
      CHECK((alpha(x) - q).norm() / q.norm() < 1e-6);
      ++checked;
    }
  }

  TEST_CASE("circulation around a straight segment is -4 pi (right-handed about the segment)") {
    dc::BoundaryCurve rect;
    rect.loops.push_back({Vec3(0, 0, -5), Vec3(0, 0, 5), Vec3(10, 0, 5), Vec3(10, 0, -5)});
    const dc::BiotSavart alpha(rect);
    const int n = 10000;
    const double r = 0.05;
    double circulation = 0;
    for (int i = 0; i < n; ++i) {
      const double t = 2 * std::numbers::pi * (i + 0.5) / n;
      const Vec3 tangent(-std::sin(t), std::cos(t), 0);
      circulation += alpha(Vec3(r * std::cos(t), r * std::sin(t), 0)).dot(tangent) * r * 2 * std::numbers::pi / n;
    }
    CHECK(circulation == doctest::Approx(-4 * std::numbers::pi).epsilon(1e-3));
  }

  TEST_CASE("alpha is curl free away from the curve") {
    const auto curve = dc::generate_curve(dc::CurveKind::trefoil, 128, 0.8);
    const dc::BiotSavart alpha(curve);
    dc::Rng rng(8);
    const double h = 1e-4;
    int checked = 0;
    while (checked < 50) {
      const Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const double d = dc::closest_point_curve(curve, x);
      if (d < 0.3) continue;
      Eigen::Matrix3d J;  // J(i, k) = d alpha_i / d x_k
      for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = h;
        J.col(k) = (alpha(x + e) - alpha(x - e)) / (2 * h);
      }
      const Vec3 curl(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
      CHECK(curl.norm() <= 1e-2 * alpha(x).norm() / d);
      ++checked;
    }
  }

  TEST_CASE("near-curve queries stay finite") {
    const auto circle = dc::generate_curve(dc::CurveKind::circle, 24, 1.0);
    const dc::BiotSavart alpha(circle);
    CHECK(alpha(circle.loops[0][3]).allFinite());
    CHECK(alpha(0.5 * (circle.loops[0][3] + circle.loops[0][4])).allFinite());
    CHECK(dc::BiotSavart(dc::BoundaryCurve{})(Vec3::Zero()).norm() == 0.0);
  }

  TEST_CASE("batch and scale") {
    const auto curve = dc::generate_curve(dc::CurveKind::hopf, 48, 0.8);
    const dc::BiotSavart alpha(curve);
    dc::Rng rng(1);
    const Eigen::Matrix3Xd x = random_points(37, rng);
    const Eigen::Matrix3Xd b = alpha.batch(x, 1e-3);
    for (int i = 0; i < 37; ++i) CHECK((b.col(i) - 1e-3 * alpha(x.col(i))).norm() <= 1e-15 * alpha(x.col(i)).norm() * 1e-3);
    CHECK(alpha.segment_count() == 96);
  }

  TEST_CASE("boundary weight values") {
    const auto circle = dc::generate_curve(dc::CurveKind::circle, 96, 1.0);
    CHECK(dc::boundary_weight(circle, circle.loops[0][5], 0.1) == 1.0);
    // dist = 0.1 straight above a vertex.
    CHECK(dc::boundary_weight(circle, circle.loops[0][5] + Vec3(0, 0, 0.1), 0.1) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(dc::boundary_weight(circle, circle.loops[0][5] + Vec3(0, 0, 1.0), 0.1) < 1e-21);
  }

  TEST_CASE("metric matrices are symmetric PSD") {
    const auto accel = hemisphere_target();
    auto boundary = std::make_shared<const dc::BoundaryCurve>(dc::extract_boundary_loops(accel->mesh()));
    const auto spec = dc::MetricSpec::target(accel, boundary, true);
    dc::Rng rng(6);
    for (int i = 0; i < 200; ++i) {
      const Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      for (bool weighted : {false, true}) {
        const auto B = dc::metric_matrix(spec, x, weighted).matrix;
        CHECK((B - B.transpose()).norm() == 0.0);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(B);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
      }
    }
    const auto euclid = dc::metric_matrix(dc::MetricSpec::euclidean(), Vec3(0.1, 0.2, 0.3));
    CHECK(euclid.matrix == Eigen::Matrix3d::Identity());
    CHECK_THROWS_AS(dc::MetricSpec::target(nullptr, boundary, false), dc::InputError);
  }

  TEST_CASE("current loss: trivial values") {
    dc::Rng rng(2);
    const Eigen::Matrix3Xd x = random_points(100, rng);
    const dc::NeuralCurrent zero{testing::constant_field(0.0), {}, 1e-3};
    CHECK(dc::current_loss(zero, dc::MetricSpec::euclidean(), x).loss == 0.0);

    const dc::NeuralCurrent linear{testing::linear_z_field(-0.25), {}, 1e-3};
    CHECK(dc::current_loss(linear, dc::MetricSpec::euclidean(), x).loss == doctest::Approx(0.25).epsilon(1e-14));
    CHECK_THROWS_AS(dc::current_loss(linear, dc::MetricSpec::euclidean(), Eigen::Matrix3Xd(3, 0)), dc::InputError);
  }

  TEST_CASE("current loss is invariant under cyclic relabeling of the curve") {
    auto current = tiny_current();
    dc::Rng rng(3);
    const Eigen::Matrix3Xd x = random_points(500, rng);
    const double base = dc::current_loss(current, dc::MetricSpec::euclidean(), x).loss;
    auto& loop = current.boundary.loops[0];
    std::rotate(loop.begin(), loop.begin() + 7, loop.end());
    CHECK(dc::current_loss(current, dc::MetricSpec::euclidean(), x).loss == doctest::Approx(base).epsilon(1e-12));
  }

  TEST_CASE("current loss gradient matches finite differences") {
    auto current = tiny_current(9);
    current.alpha_scale = 0.05;  // make the boundary term matter
    dc::Rng rng(10);
    const Eigen::Matrix3Xd x = random_points(64, rng);
    const auto accel = hemisphere_target();
    auto boundary = std::make_shared<const dc::BoundaryCurve>(dc::extract_boundary_loops(accel->mesh()));
    for (const auto& spec : {dc::MetricSpec::euclidean(), dc::MetricSpec::target(accel, boundary, true)}) {
      const auto lg = dc::current_loss(current, spec, x);
      Eigen::VectorXd fd(lg.gradient.size());
      const double h = 1e-6;
      for (Eigen::Index p = 0; p < fd.size(); ++p) {
        auto plus = current, minus = current;
        plus.field.params()[p] += h;
        minus.field.params()[p] -= h;
        fd[p] = (dc::current_loss(plus, spec, x).loss - dc::current_loss(minus, spec, x).loss) / (2 * h);
      }
      CHECK(rel_error(lg.gradient, fd) < 1e-3);
    }
  }

  TEST_CASE("boundary weighting applies to the second half of the batch only") {
    const auto accel = hemisphere_target();
    auto boundary = std::make_shared<const dc::BoundaryCurve>(dc::extract_boundary_loops(accel->mesh()));
    const auto plain = dc::MetricSpec::target(accel, boundary, false);
    const auto weighted = dc::MetricSpec::target(accel, boundary, true);
    const auto current = tiny_current(2);
    dc::Rng rng(5);
    const Eigen::Matrix3Xd x = random_points(40, rng);
    double expected = 0;
    const Eigen::Matrix3Xd omega = dc::current_vector_batch(current, x);
    for (int i = 0; i < 40; ++i) {
      expected += (dc::metric_matrix(weighted, x.col(i), i >= 20).matrix * omega.col(i)).norm();
    }
    CHECK(dc::current_loss(current, weighted, x).loss == doctest::Approx(expected / 40).epsilon(1e-10));
    CHECK(dc::current_loss(current, plain, x).loss > dc::current_loss(current, weighted, x).loss);
  }

  TEST_CASE("results do not depend on the thread count; float32 stays close") {
    const auto current = tiny_current(3);
    dc::Rng rng(7);
    const Eigen::Matrix3Xd x = random_points(3000, rng);
    dc::set_thread_count(1);
    const auto one = dc::current_loss(current, dc::MetricSpec::euclidean(), x);
    dc::set_thread_count(4);
    const auto four = dc::current_loss(current, dc::MetricSpec::euclidean(), x);
    dc::set_thread_count(1);
    CHECK(one.loss == four.loss);
    CHECK(one.gradient == four.gradient);
    const auto single = dc::current_loss(current, dc::MetricSpec::euclidean(), x, {dc::Precision::float32, 512});
    CHECK(single.loss == doctest::Approx(one.loss).epsilon(1e-5));
    CHECK(rel_error(single.gradient, one.gradient) < 1e-4);
  }

  TEST_CASE("surface loss: hinge values") {
    const std::vector<dc::SurfaceSample> samples(10, {Vec3::Zero(), Vec3(0, 0, 1)});
    const std::vector<double> eps(10, 0.02);
    const double delta = 0.01;
    CHECK(dc::surface_loss(testing::constant_field(0.3), samples, eps, delta).loss == doctest::Approx(delta));
    // f = -k z: f(x - eps n) - f(x + eps n) = 2 k eps.
    CHECK(dc::surface_loss(testing::linear_z_field(-delta / (4 * 0.02)), samples, eps, delta).loss ==
          doctest::Approx(delta / 2));
    CHECK(dc::surface_loss(testing::linear_z_field(-delta / (2 * 0.02)), samples, eps, delta).loss ==
          doctest::Approx(0.0));
    CHECK(dc::surface_loss(testing::linear_z_field(-1.0), samples, eps, delta).loss == 0.0);
    CHECK_THROWS_AS(dc::surface_loss(testing::constant_field(0), samples, eps, 0.0), dc::InputError);
  }

  TEST_CASE("surface loss gradient matches finite differences") {
    const auto field = dc::NeuralField::init(testing::tiny_config(11));
    const auto target = dc::primitives::hemisphere(0.5, 6, 16);
    dc::Rng rng(12);
    const auto samples = dc::sample_surface(target, 50, rng);
    std::vector<double> eps(50);
    for (auto& e : eps) e = rng.uniform(0.0199, 0.0201);
    const double delta = 0.5;  // keep every hinge active
    const auto lg = dc::surface_loss(field, samples, eps, delta);
    REQUIRE(lg.loss > 0.0);
    Eigen::VectorXd fd(lg.gradient.size());
    const double h = 1e-6;
    for (Eigen::Index p = 0; p < fd.size(); ++p) {
      auto plus = field, minus = field;
      plus.params()[p] += h;
      minus.params()[p] -= h;
      fd[p] = (dc::surface_loss(plus, samples, eps, delta).loss - dc::surface_loss(minus, samples, eps, delta).loss) /
              (2 * h);
    }
    CHECK(rel_error(lg.gradient, fd) < 1e-5);
  }

  TEST_CASE("mass estimate: zero and constant integrands") {
    dc::Rng rng(1);
    const dc::NeuralCurrent zero{testing::constant_field(0.0), {}, 1e-3};
    const auto z = dc::mass_estimate(zero, dc::MetricSpec::euclidean(), 1000, rng);
    CHECK(z.estimate == 0.0);
    CHECK(z.standard_error == 0.0);
    const dc::NeuralCurrent linear{testing::linear_z_field(0.3), {}, 1e-3};
    const auto c = dc::mass_estimate(linear, dc::MetricSpec::euclidean(), 1000, rng);
    CHECK(c.estimate == doctest::Approx(8 * 0.3).epsilon(1e-12));
    CHECK(c.standard_error < 1e-12);
  }

  TEST_CASE("Monte-Carlo mass agrees with a Riemann-sum oracle") {
    const auto current = tiny_current(13);
    const int n = 64;
    const double h = 2.0 / n;
    Eigen::Matrix3Xd nodes(3, n * n * n);
    int c = 0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) nodes.col(c++) = Vec3(-1 + (i + 0.5) * h, -1 + (j + 0.5) * h, -1 + (k + 0.5) * h);
    const Eigen::Matrix3Xd omega = dc::current_vector_batch(current, nodes);
    const double riemann = omega.colwise().norm().sum() * h * h * h;

    dc::Rng rng(14);
    const auto mc = dc::mass_estimate(current, dc::MetricSpec::euclidean(), 1000000, rng);
    CHECK(std::abs(mc.estimate - riemann) <= 3 * mc.standard_error);
  }
}
