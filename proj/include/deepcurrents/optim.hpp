#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "deepcurrents/currents.hpp"
#include "deepcurrents/field.hpp"
#include "deepcurrents/geometry.hpp"

namespace deepcurrents {

/// Step decay: base_lr * decay_factor^floor(iteration / decay_every).
struct Schedule {
  double base_lr = 5e-4;
  double decay_factor = 0.6;
  std::int64_t decay_every = 10000;

  void validate() const;
};

double lr_at(const Schedule& schedule, std::int64_t iteration);

/// Bias-corrected Adam moments.
struct AdamState {
  explicit AdamState(Eigen::Index size = 0)
      : first(Eigen::VectorXd::Zero(size)), second(Eigen::VectorXd::Zero(size)) {}

  Eigen::VectorXd first;
  Eigen::VectorXd second;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& gradient, double lr);

enum class Task { minimal, reconstruct };

struct TrainConfig {
  std::int64_t iterations = 100000;
  std::size_t ambient_batch = 4096;
  std::size_t surface_batch = 4000;
  Schedule schedule;
  /// Master seed; the field, ambient, surface and eps streams are derived
  /// from it with derive_seed().
  std::uint64_t seed = 0;
  double alpha_scale = 1e-3;

  bool use_surface_loss = false;
  bool boundary_weighting = false;
  double sigma_w = 0.1;
  double surface_delta = 0.01;
  double eps_lo = 0.0199;
  double eps_hi = 0.0201;
  double current_weight = 1.0;
  double surface_weight = 1.0;

  FieldConfig field;
  Precision precision = Precision::float64;
  Eigen::Index chunk = 512;
  std::int64_t log_every = 100;

  /// Learning rate 5e-4 decayed by 0.6 every 10000 steps, 4096 ambient
  /// samples, Euclidean metric only, 1e5 iterations.
  static TrainConfig minimal_defaults();
  /// Learning rate 1e-3 decayed by 0.6 every 2000 steps, 4000 ambient plus
  /// 4000 surface samples, surface loss and boundary weighting on, 1e4
  /// iterations.
  static TrainConfig reconstruction_defaults();

  void validate(Task task) const;
};

struct LossRecord {
  std::int64_t iteration = 0;
  double lr = 0.0;
  double current_loss = 0.0;
  double surface_loss = 0.0;
  /// Domain volume times the batch current loss.
  double mass_estimate = 0.0;
};

struct TrainResult {
  NeuralCurrent current;
  std::vector<LossRecord> history;
};

using TrainCallback = std::function<void(const LossRecord&)>;

/// Euclidean mass minimization with the boundary held fixed through alpha.
/// The callback fires every config.log_every iterations and on the last one.
TrainResult train_minimal_surface(const BoundaryCurve& boundary, const TrainConfig& config,
                                  const TrainCallback& on_log = {});

/// Fits a current to a target mesh already normalized to [-0.5, 0.5]^3,
/// whose boundary loops define alpha.
TrainResult train_reconstruction(const TriangleMesh& target, const TrainConfig& config,
                                 const TrainCallback& on_log = {});

}  // namespace deepcurrents
