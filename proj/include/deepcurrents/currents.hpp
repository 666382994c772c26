#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "deepcurrents/field.hpp"
#include "deepcurrents/geometry.hpp"
#include "deepcurrents/rng.hpp"

namespace deepcurrents {

/// The 1-form omega = df + alpha, handled as the vector field
/// grad f + alpha_scale * alpha_Gamma.
struct NeuralCurrent {
  NeuralField field;
  BoundaryCurve boundary;
  double alpha_scale = 1e-3;
};

/// Closed-form Biot-Savart field of a polygonal curve,
///
///   alpha(x) = sum_i (t_i . (r1_i/|r1_i| - r0_i/|r0_i|)) (t_i x r0_i) / |t_i x r0_i|^2
///
/// with t_i the unit tangent of segment i and r0_i, r1_i the vectors from x
/// to its endpoints. This equals the line integral of dl x r / |r|^3 with
/// r = (curve point - x), so the circulation around a segment, taken
/// right-handed about the segment direction, is -4 pi.
///
/// Terms with |t_i x r0_i|^2 < 1e-18 use 1e-18 in the denominator.
class BiotSavart {
 public:
  explicit BiotSavart(const BoundaryCurve& curve);

  /// Unscaled field at x.
  Vec3 operator()(const Vec3& x) const;
  /// scale * alpha at each column of x.
  Eigen::Matrix3Xd batch(const Eigen::Matrix3Xd& x, double scale) const;

  std::size_t segment_count() const { return static_cast<std::size_t>(tangent_.cols()); }

 private:
  // Loops are stored back to back; segment s runs from vertex s to vertex
  // next_[s], so each vertex's unit direction is computed once per query.
  Eigen::Matrix3Xd vertices_;
  std::vector<Eigen::Index> next_;
  Eigen::Matrix3Xd tangent_;
};

Vec3 biot_savart(const BoundaryCurve& boundary, const Vec3& x, double scale);

/// grad f(x) + alpha_scale * alpha(x).
Vec3 current_vector(const NeuralCurrent& current, const Vec3& x);
Eigen::Matrix3Xd current_vector_batch(const NeuralCurrent& current, const Eigen::Matrix3Xd& x);

enum class MetricMode { euclidean, target_surface };

/// Background metric. In target_surface mode B_x = w_x (I - n n^T) where n is
/// the face normal at the closest point of the target surface.
struct MetricSpec {
  MetricMode mode = MetricMode::euclidean;
  std::shared_ptr<const MeshAccel> surface;
  std::shared_ptr<const BoundaryCurve> boundary;
  double sigma_w = 0.1;
  bool boundary_weighting = false;

  static MetricSpec euclidean() { return {}; }
  static MetricSpec target(std::shared_ptr<const MeshAccel> surface, std::shared_ptr<const BoundaryCurve> boundary,
                           bool boundary_weighting, double sigma_w = 0.1);

  void validate() const;
};

struct MetricSample {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
  double weight = 1.0;
  Vec3 normal = Vec3::Zero();
};

/// exp(-dist(x, Gamma)^2 / (2 sigma_w^2)).
double boundary_weight(const BoundaryCurve& boundary, const Vec3& x, double sigma_w);

/// `weighted` selects the Gaussian boundary weight; it is ignored in
/// Euclidean mode.
MetricSample metric_matrix(const MetricSpec& spec, const Vec3& x, bool weighted);
inline MetricSample metric_matrix(const MetricSpec& spec, const Vec3& x) {
  return metric_matrix(spec, x, spec.boundary_weighting);
}

struct BatchOptions {
  Precision precision = Precision::float64;
  /// Columns per work item. Fixed so that results do not depend on the
  /// thread count.
  Eigen::Index chunk = 512;
};

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Mean over the batch of |B_x omega(x)| and its exact parameter gradient.
/// With boundary weighting, the first half of the batch uses w_x = 1 and
/// the second half the Gaussian weight.
LossGradient current_loss(const NeuralCurrent& current, const MetricSpec& spec, const Eigen::Matrix3Xd& batch,
                          const BatchOptions& options = {});

/// Mean of max(0, delta - f(x - eps n) + f(x + eps n)) with one eps per sample.
LossGradient surface_loss(const NeuralField& field, const std::vector<SurfaceSample>& samples,
                          const std::vector<double>& eps, double delta, const BatchOptions& options = {});
/// Draws eps uniformly from [eps_lo, eps_hi] per sample.
LossGradient surface_loss(const NeuralField& field, const std::vector<SurfaceSample>& samples, double delta,
                          double eps_lo, double eps_hi, Rng& rng, const BatchOptions& options = {});

struct MassEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo estimate of the volume integral of |B_x omega| over [-1,1]^3
/// (unit boundary weight).
MassEstimate mass_estimate(const NeuralCurrent& current, const MetricSpec& spec, std::size_t n, Rng& rng);

/// Uniform points in [-1, 1]^3.
Eigen::Matrix3Xd sample_ambient(std::size_t n, Rng& rng);

}  // namespace deepcurrents
