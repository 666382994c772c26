#include "deepcurrents/currents.hpp"

#include <algorithm>
#include <cmath>

#include "deepcurrents/errors.hpp"
#include "deepcurrents/parallel.hpp"

namespace deepcurrents {

namespace {

constexpr double kCrossFloor = 1e-18;
constexpr double kLengthFloor = 1e-300;

struct ChunkResult {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

std::size_t chunk_count(Eigen::Index n, Eigen::Index chunk) {
  return static_cast<std::size_t>((n + chunk - 1) / chunk);
}

LossGradient reduce(std::vector<ChunkResult>& parts, Eigen::Index params, double normalizer) {
  LossGradient out;
  out.gradient = Eigen::VectorXd::Zero(params);
  for (auto& part : parts) {
    out.loss += part.loss;
    if (part.gradient.size() > 0) out.gradient += part.gradient;
  }
  out.loss /= normalizer;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Biot-Savart

BiotSavart::BiotSavart(const BoundaryCurve& curve) {
  const auto n = static_cast<Eigen::Index>(curve.segment_count());
  vertices_.resize(3, n);
  tangent_.resize(3, n);
  next_.resize(static_cast<std::size_t>(n));
  Eigen::Index s = 0;
  for (const auto& loop : curve.loops) {
    const Eigen::Index first = s;
    for (std::size_t i = 0; i < loop.size(); ++i, ++s) {
      vertices_.col(s) = loop[i];
      tangent_.col(s) = (loop[(i + 1) % loop.size()] - loop[i]).normalized();
      next_[static_cast<std::size_t>(s)] = i + 1 == loop.size() ? first : s + 1;
    }
  }
}

Vec3 BiotSavart::operator()(const Vec3& x) const { return batch(x, 1.0).col(0); }

Eigen::Matrix3Xd BiotSavart::batch(const Eigen::Matrix3Xd& x, double scale) const {
  constexpr int kLanes = 8;
  const Eigen::Index n = x.cols();
  const Eigen::Index segments = tangent_.cols();
  Eigen::Matrix3Xd out = Eigen::Matrix3Xd::Zero(3, n);
  if (segments == 0) return out;

  // Per vertex and lane: r = vertex - x and r / |r|.
  std::vector<double> rx(segments * kLanes), ry(segments * kLanes), rz(segments * kLanes);
  std::vector<double> ux(segments * kLanes), uy(segments * kLanes), uz(segments * kLanes);
  for (Eigen::Index base = 0; base < n; base += kLanes) {
    const auto lanes = static_cast<int>(std::min<Eigen::Index>(kLanes, n - base));
    alignas(64) double px[kLanes], py[kLanes], pz[kLanes];
    for (int j = 0; j < kLanes; ++j) {
      const Eigen::Index col = base + std::min(j, lanes - 1);
      px[j] = x(0, col);
      py[j] = x(1, col);
      pz[j] = x(2, col);
    }
    for (Eigen::Index v = 0; v < segments; ++v) {
      const double vx = vertices_(0, v), vy = vertices_(1, v), vz = vertices_(2, v);
      double* __restrict__ qx = rx.data() + v * kLanes;
      double* __restrict__ qy = ry.data() + v * kLanes;
      double* __restrict__ qz = rz.data() + v * kLanes;
      double* __restrict__ wx = ux.data() + v * kLanes;
      double* __restrict__ wy = uy.data() + v * kLanes;
      double* __restrict__ wz = uz.data() + v * kLanes;
      for (int j = 0; j < kLanes; ++j) {
        qx[j] = vx - px[j];
        qy[j] = vy - py[j];
        qz[j] = vz - pz[j];
        const double inv = 1.0 / std::max(std::sqrt(qx[j] * qx[j] + qy[j] * qy[j] + qz[j] * qz[j]), kLengthFloor);
        wx[j] = qx[j] * inv;
        wy[j] = qy[j] * inv;
        wz[j] = qz[j] * inv;
      }
    }
    alignas(64) double ax[kLanes] = {}, ay[kLanes] = {}, az[kLanes] = {};
    for (Eigen::Index s = 0; s < segments; ++s) {
      const double tx = tangent_(0, s), ty = tangent_(1, s), tz = tangent_(2, s);
      const Eigen::Index e = next_[static_cast<std::size_t>(s)];
      const double* __restrict__ r0x = rx.data() + s * kLanes;
      const double* __restrict__ r0y = ry.data() + s * kLanes;
      const double* __restrict__ r0z = rz.data() + s * kLanes;
      const double* __restrict__ u0x = ux.data() + s * kLanes;
      const double* __restrict__ u0y = uy.data() + s * kLanes;
      const double* __restrict__ u0z = uz.data() + s * kLanes;
      const double* __restrict__ u1x = ux.data() + e * kLanes;
      const double* __restrict__ u1y = uy.data() + e * kLanes;
      const double* __restrict__ u1z = uz.data() + e * kLanes;
      for (int j = 0; j < kLanes; ++j) {
        const double cx = ty * r0z[j] - tz * r0y[j];
        const double cy = tz * r0x[j] - tx * r0z[j];
        const double cz = tx * r0y[j] - ty * r0x[j];
        const double c2 = std::max(cx * cx + cy * cy + cz * cz, kCrossFloor);
        const double along = tx * (u1x[j] - u0x[j]) + ty * (u1y[j] - u0y[j]) + tz * (u1z[j] - u0z[j]);
        const double k = along / c2;
        ax[j] += k * cx;
        ay[j] += k * cy;
        az[j] += k * cz;
      }
    }
    for (int j = 0; j < lanes; ++j) out.col(base + j) = scale * Vec3(ax[j], ay[j], az[j]);
  }
  return out;
}

Vec3 biot_savart(const BoundaryCurve& boundary, const Vec3& x, double scale) {
  return scale * BiotSavart(boundary)(x);
}

Vec3 current_vector(const NeuralCurrent& current, const Vec3& x) {
  return current.field.gradient(x) + biot_savart(current.boundary, x, current.alpha_scale);
}

Eigen::Matrix3Xd current_vector_batch(const NeuralCurrent& current, const Eigen::Matrix3Xd& x) {
  return current.field.gradient_batch(x) + BiotSavart(current.boundary).batch(x, current.alpha_scale);
}

// ---------------------------------------------------------------------------
// Metric

MetricSpec MetricSpec::target(std::shared_ptr<const MeshAccel> surface, std::shared_ptr<const BoundaryCurve> boundary,
                              bool boundary_weighting, double sigma_w) {
  MetricSpec spec;
  spec.mode = MetricMode::target_surface;
  spec.surface = std::move(surface);
  spec.boundary = std::move(boundary);
  spec.boundary_weighting = boundary_weighting;
  spec.sigma_w = sigma_w;
  spec.validate();
  return spec;
}

void MetricSpec::validate() const {
  if (!(sigma_w > 0.0)) throw InputError("metric: sigma_w must be positive");
  if (mode == MetricMode::euclidean) {
    if (surface) throw InputError("metric: a target surface requires target_surface mode");
    if (boundary_weighting) throw InputError("metric: boundary weighting requires target_surface mode");
    return;
  }
  if (!surface) throw InputError("metric: target_surface mode needs a target surface");
  if (boundary_weighting && (!boundary || boundary->empty())) {
    throw InputError("metric: boundary weighting needs a non-empty boundary");
  }
}

double boundary_weight(const BoundaryCurve& boundary, const Vec3& x, double sigma_w) {
  const double d = closest_point_curve(boundary, x);
  return std::exp(-d * d / (2.0 * sigma_w * sigma_w));
}

MetricSample metric_matrix(const MetricSpec& spec, const Vec3& x, bool weighted) {
  MetricSample out;
  if (spec.mode == MetricMode::euclidean) return out;
  out.normal = spec.surface->closest_point(x).normal;
  out.weight = weighted && spec.boundary ? boundary_weight(*spec.boundary, x, spec.sigma_w) : 1.0;
  out.matrix = out.weight * (Eigen::Matrix3d::Identity() - out.normal * out.normal.transpose());
  return out;
}

// ---------------------------------------------------------------------------
// Losses

namespace {

template <typename T>
ChunkResult current_loss_chunk(const NeuralCurrent& current, const MetricSpec& spec, const BiotSavart& alpha,
                               const Eigen::Matrix3Xd& x, Eigen::Index first_global, Eigen::Index weighted_from,
                               double normalizer) {
  const Eigen::Index n = x.cols();
  const auto tape = current.field.forward<T>(x, true);
  const Eigen::Matrix3Xd omega = tape.gradient + alpha.batch(x, current.alpha_scale);

  ChunkResult out;
  Eigen::Matrix3Xd upstream(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec3 v = omega.col(i);
    double weight = 1.0;
    if (spec.mode == MetricMode::target_surface) {
      const Vec3 normal = spec.surface->closest_point(x.col(i)).normal;
      v -= normal.dot(v) * normal;
      if (spec.boundary_weighting && first_global + i >= weighted_from) {
        weight = boundary_weight(*spec.boundary, x.col(i), spec.sigma_w);
      }
    }
    // |B omega| = w |P omega|; d|B omega|/d omega = B^T B omega / |B omega| = w P omega / |P omega|.
    const double norm = v.norm();
    out.loss += weight * norm;
    upstream.col(i) = norm > 0.0 ? Vec3(weight * v / (norm * normalizer)) : Vec3::Zero();
  }
  out.gradient = Eigen::VectorXd::Zero(current.field.params().size());
  current.field.backward(tape, Eigen::VectorXd::Zero(n), &upstream, out.gradient);
  return out;
}

template <typename T>
ChunkResult surface_loss_chunk(const NeuralField& field, const std::vector<SurfaceSample>& samples,
                               const std::vector<double>& eps, double delta, std::size_t begin, std::size_t count,
                               double normalizer) {
  const auto n = static_cast<Eigen::Index>(count);
  Eigen::Matrix3Xd x(3, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[begin + static_cast<std::size_t>(i)];
    const double e = eps[begin + static_cast<std::size_t>(i)];
    x.col(i) = s.point - e * s.normal;
    x.col(n + i) = s.point + e * s.normal;
  }
  const auto tape = field.forward<T>(x, false);
  ChunkResult out;
  Eigen::VectorXd upstream = Eigen::VectorXd::Zero(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hinge = delta - tape.value[i] + tape.value[n + i];
    if (hinge > 0.0) {
      out.loss += hinge;
      upstream[i] = -1.0 / normalizer;
      upstream[n + i] = 1.0 / normalizer;
    }
  }
  out.gradient = Eigen::VectorXd::Zero(field.params().size());
  field.backward(tape, upstream, nullptr, out.gradient);
  return out;
}

}  // namespace

LossGradient current_loss(const NeuralCurrent& current, const MetricSpec& spec, const Eigen::Matrix3Xd& batch,
                          const BatchOptions& options) {
  spec.validate();
  const Eigen::Index n = batch.cols();
  if (n == 0) throw InputError("current_loss: empty batch");
  const BiotSavart alpha(current.boundary);
  const Eigen::Index weighted_from = spec.boundary_weighting ? n / 2 : n;
  const auto normalizer = static_cast<double>(n);
  std::vector<ChunkResult> parts(chunk_count(n, options.chunk));
  parallel_for_chunks(parts.size(), [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * options.chunk;
    const Eigen::Index count = std::min(options.chunk, n - begin);
    const Eigen::Matrix3Xd x = batch.middleCols(begin, count);
    parts[c] = options.precision == Precision::float32
                   ? current_loss_chunk<float>(current, spec, alpha, x, begin, weighted_from, normalizer)
                   : current_loss_chunk<double>(current, spec, alpha, x, begin, weighted_from, normalizer);
  });
  return reduce(parts, current.field.params().size(), normalizer);
}

LossGradient surface_loss(const NeuralField& field, const std::vector<SurfaceSample>& samples,
                          const std::vector<double>& eps, double delta, const BatchOptions& options) {
  if (!(delta > 0.0)) throw InputError("surface_loss: delta must be positive");
  if (eps.size() != samples.size()) throw InputError("surface_loss: one eps per sample is required");
  if (samples.empty()) throw InputError("surface_loss: empty sample set");
  const auto normalizer = static_cast<double>(samples.size());
  const auto chunk = static_cast<std::size_t>(options.chunk);
  std::vector<ChunkResult> parts((samples.size() + chunk - 1) / chunk);
  parallel_for_chunks(parts.size(), [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    const std::size_t count = std::min(chunk, samples.size() - begin);
    parts[c] = options.precision == Precision::float32
                   ? surface_loss_chunk<float>(field, samples, eps, delta, begin, count, normalizer)
                   : surface_loss_chunk<double>(field, samples, eps, delta, begin, count, normalizer);
  });
  return reduce(parts, field.params().size(), normalizer);
}

LossGradient surface_loss(const NeuralField& field, const std::vector<SurfaceSample>& samples, double delta,
                          double eps_lo, double eps_hi, Rng& rng, const BatchOptions& options) {
  std::vector<double> eps(samples.size());
  for (auto& e : eps) e = rng.uniform(eps_lo, eps_hi);
  return surface_loss(field, samples, eps, delta, options);
}

Eigen::Matrix3Xd sample_ambient(std::size_t n, Rng& rng) {
  Eigen::Matrix3Xd x(3, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (int k = 0; k < 3; ++k) x(k, i) = rng.uniform(-1.0, 1.0);
  }
  return x;
}

MassEstimate mass_estimate(const NeuralCurrent& current, const MetricSpec& spec, std::size_t n, Rng& rng) {
  if (n == 0) throw InputError("mass_estimate: need at least one sample");
  spec.validate();
  constexpr double kVolume = 8.0;
  constexpr std::size_t kBlock = 8192;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t done = 0; done < n; done += kBlock) {
    const Eigen::Matrix3Xd x = sample_ambient(std::min(kBlock, n - done), rng);
    const Eigen::Matrix3Xd omega = current_vector_batch(current, x);
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      const double v = (metric_matrix(spec, x.col(i), false).matrix * omega.col(i)).norm();
      sum += v;
      sum_sq += v * v;
    }
  }
  const auto count = static_cast<double>(n);
  const double mean = sum / count;
  const double var = n > 1 ? std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0)) : 0.0;
  return {kVolume * mean, kVolume * std::sqrt(var / count)};
}

}  // namespace deepcurrents
