#include "deepcurrents/optim.hpp"

#include <cmath>
#include <string>

#include "deepcurrents/errors.hpp"
#include "deepcurrents/parallel.hpp"
#include "deepcurrents/rng.hpp"

namespace deepcurrents {

void Schedule::validate() const {
  if (!(base_lr > 0.0)) throw InputError("schedule: base learning rate must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw InputError("schedule: decay factor must lie in (0, 1]");
  if (decay_every < 1) throw InputError("schedule: decay interval must be >= 1");
}

double lr_at(const Schedule& schedule, std::int64_t iteration) {
  const auto decays = static_cast<double>(std::max<std::int64_t>(iteration, 0) / schedule.decay_every);
  return schedule.base_lr * std::pow(schedule.decay_factor, decays);
}

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& gradient, double lr) {
  if (state.first.size() != params.size() || gradient.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  state.first = state.beta1 * state.first + (1.0 - state.beta1) * gradient;
  state.second = state.beta2 * state.second + (1.0 - state.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.first.array() / c1) / ((state.second.array() / c2).sqrt() + state.epsilon);
}

TrainConfig TrainConfig::minimal_defaults() {
  TrainConfig c;
  c.iterations = 100000;
  c.ambient_batch = 4096;
  c.surface_batch = 0;
  c.schedule = {5e-4, 0.6, 10000};
  c.use_surface_loss = false;
  c.boundary_weighting = false;
  return c;
}

TrainConfig TrainConfig::reconstruction_defaults() {
  TrainConfig c;
  c.iterations = 10000;
  c.ambient_batch = 4000;
  c.surface_batch = 4000;
  c.schedule = {1e-3, 0.6, 2000};
  c.use_surface_loss = true;
  c.boundary_weighting = true;
  return c;
}

void TrainConfig::validate(Task task) const {
  if (iterations < 0) throw InputError("config: iterations must be >= 0");
  if (ambient_batch < 1) throw InputError("config: ambient batch must be >= 1");
  if (chunk < 1) throw InputError("config: chunk must be >= 1");
  if (log_every < 1) throw InputError("config: log interval must be >= 1");
  if (!(alpha_scale > 0.0)) throw InputError("config: alpha scale must be positive");
  if (!(sigma_w > 0.0)) throw InputError("config: sigma_w must be positive");
  schedule.validate();
  field.validate();
  if (task == Task::minimal) {
    if (use_surface_loss) throw InputError("config: the surface loss needs a target mesh (reconstruct task only)");
    if (boundary_weighting) throw InputError("config: boundary weighting needs a target mesh (reconstruct task only)");
    return;
  }
  if (use_surface_loss) {
    if (surface_batch < 1) throw InputError("config: surface batch must be >= 1 when the surface loss is on");
    if (!(surface_delta > 0.0)) throw InputError("config: surface delta must be positive");
    if (!(eps_lo > 0.0 && eps_lo <= eps_hi)) throw InputError("config: eps range must satisfy 0 < lo <= hi");
  }
}

namespace {

void check_finite(const LossGradient& lg, std::int64_t iteration, const char* what) {
  if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
    throw NumericalError(std::string("non-finite ") + what + " at iteration " + std::to_string(iteration) +
                         " (loss = " + std::to_string(lg.loss) + ")");
  }
}

NeuralField init_training_field(const TrainConfig& config) {
  FieldConfig fc = config.field;
  fc.seed = derive_seed(config.seed, "field");
  return NeuralField::init(fc);
}

void log_if_due(const TrainConfig& config, const LossRecord& record, const TrainCallback& on_log) {
  if (!on_log) return;
  if (record.iteration % config.log_every == 0 || record.iteration + 1 == config.iterations) on_log(record);
}

}  // namespace

TrainResult train_minimal_surface(const BoundaryCurve& boundary, const TrainConfig& config,
                                  const TrainCallback& on_log) {
  config.validate(Task::minimal);
  retain_large_allocations();
  boundary.validate();
  TrainResult result{{init_training_field(config), boundary, config.alpha_scale}, {}};
  NeuralCurrent& current = result.current;
  const MetricSpec spec = MetricSpec::euclidean();
  const BatchOptions options{config.precision, config.chunk};
  AdamState adam(current.field.params().size());
  Rng ambient(config.seed, "ambient");

  result.history.reserve(static_cast<std::size_t>(config.iterations));
  for (std::int64_t it = 0; it < config.iterations; ++it) {
    const double lr = lr_at(config.schedule, it);
    const Eigen::Matrix3Xd x = sample_ambient(config.ambient_batch, ambient);
    const LossGradient curr = current_loss(current, spec, x, options);
    check_finite(curr, it, "current loss");
    adam_step(adam, current.field.params(), config.current_weight * curr.gradient, lr);
    if (!current.field.params().allFinite()) {
      throw NumericalError("parameters became non-finite at iteration " + std::to_string(it));
    }
    result.history.push_back({it, lr, curr.loss, 0.0, 8.0 * curr.loss});
    log_if_due(config, result.history.back(), on_log);
  }
  return result;
}

TrainResult train_reconstruction(const TriangleMesh& target, const TrainConfig& config, const TrainCallback& on_log) {
  config.validate(Task::reconstruct);
  retain_large_allocations();
  if (target.empty()) throw InputError("reconstruction target is empty");
  for (const auto& v : target.vertices) {
    if ((v.array().abs() > 0.5 + 1e-9).any()) {
      throw InputError("reconstruction target must be normalized to [-0.5, 0.5]^3");
    }
  }
  auto boundary = std::make_shared<const BoundaryCurve>(extract_boundary_loops(target));
  if (boundary->empty()) {
    throw InputError("reconstruction target is a closed mesh; a current needs at least one boundary loop");
  }
  boundary->validate();
  auto accel = std::make_shared<const MeshAccel>(target);
  const MetricSpec spec = MetricSpec::target(accel, boundary, config.boundary_weighting, config.sigma_w);
  const BatchOptions options{config.precision, config.chunk};
  const SurfaceSampler sampler(accel->mesh());

  TrainResult result{{init_training_field(config), *boundary, config.alpha_scale}, {}};
  NeuralCurrent& current = result.current;
  AdamState adam(current.field.params().size());
  Rng ambient(config.seed, "ambient");
  Rng surface(config.seed, "surface");
  Rng eps(config.seed, "epsilon");

  result.history.reserve(static_cast<std::size_t>(config.iterations));
  for (std::int64_t it = 0; it < config.iterations; ++it) {
    const double lr = lr_at(config.schedule, it);
    const Eigen::Matrix3Xd x = sample_ambient(config.ambient_batch, ambient);
    const LossGradient curr = current_loss(current, spec, x, options);
    check_finite(curr, it, "current loss");
    Eigen::VectorXd gradient = config.current_weight * curr.gradient;

    LossRecord record{it, lr, curr.loss, 0.0, 8.0 * curr.loss};
    if (config.use_surface_loss) {
      const auto samples = sampler.sample(config.surface_batch, surface);
      const LossGradient surf =
          surface_loss(current.field, samples, config.surface_delta, config.eps_lo, config.eps_hi, eps, options);
      check_finite(surf, it, "surface loss");
      gradient += config.surface_weight * surf.gradient;
      record.surface_loss = surf.loss;
    }
    adam_step(adam, current.field.params(), gradient, lr);
    if (!current.field.params().allFinite()) {
      throw NumericalError("parameters became non-finite at iteration " + std::to_string(it));
    }
    result.history.push_back(record);
    log_if_due(config, record, on_log);
  }
  return result;
}

}  // namespace deepcurrents
