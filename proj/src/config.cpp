#include "deepcurrents/config.hpp"

#include <string>

#include "deepcurrents/errors.hpp"

namespace deepcurrents {

namespace {

std::string_view to_string(Precision p) { return p == Precision::float32 ? "float32" : "float64"; }

Precision parse_precision(const std::string& name) {
  if (name == "float32") return Precision::float32;
  if (name == "float64") return Precision::float64;
  throw InputError("unknown precision '" + name + "' (expected float32 or float64)");
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
  try {
    out = j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(std::string("config: bad value for '") + key + "': " + j.dump());
  }
}

void require_object(const nlohmann::json& j, const char* what) {
  if (!j.is_object()) throw InputError(std::string("config: ") + what + " must be a JSON object");
}

// The field seed of a training run is derived from the master seed.
nlohmann::json training_field_json(const FieldConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("seed");
  return j;
}

}  // namespace

nlohmann::json to_json(const FieldConfig& c) {
  return {
      {"hidden_layers", c.hidden_layers}, {"width", c.width},     {"frequencies", c.frequencies},
      {"rff_sigma", c.rff_sigma},         {"use_rff", c.use_rff}, {"activation", std::string(to_string(c.activation))},
      {"seed", c.seed},
  };
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"iterations", c.iterations},
      {"ambient_batch", c.ambient_batch},
      {"surface_batch", c.surface_batch},
      {"lr", c.schedule.base_lr},
      {"lr_decay", c.schedule.decay_factor},
      {"lr_decay_every", c.schedule.decay_every},
      {"seed", c.seed},
      {"alpha_scale", c.alpha_scale},
      {"surface_loss", c.use_surface_loss},
      {"boundary_weighting", c.boundary_weighting},
      {"sigma_w", c.sigma_w},
      {"surface_delta", c.surface_delta},
      {"eps_lo", c.eps_lo},
      {"eps_hi", c.eps_hi},
      {"current_weight", c.current_weight},
      {"surface_weight", c.surface_weight},
      {"precision", std::string(to_string(c.precision))},
      {"chunk", c.chunk},
      {"log_every", c.log_every},
      {"field", training_field_json(c.field)},
  };
}

void merge_json(FieldConfig& c, const nlohmann::json& j) {
  require_object(j, "field");
  for (const auto& [key, value] : j.items()) {
    if (key == "hidden_layers") take(value, "hidden_layers", c.hidden_layers);
    else if (key == "width") take(value, "width", c.width);
    else if (key == "frequencies") take(value, "frequencies", c.frequencies);
    else if (key == "rff_sigma") take(value, "rff_sigma", c.rff_sigma);
    else if (key == "use_rff") take(value, "use_rff", c.use_rff);
    else if (key == "seed") take(value, "seed", c.seed);
    else if (key == "activation") {
      std::string name;
      take(value, "activation", name);
      c.activation = parse_activation(name);
    } else {
      throw InputError("config: unknown field key '" + key + "'");
    }
  }
}

void merge_json(TrainConfig& c, const nlohmann::json& j) {
  require_object(j, "config");
  for (const auto& [key, value] : j.items()) {
    if (key == "iterations") take(value, "iterations", c.iterations);
    else if (key == "ambient_batch") take(value, "ambient_batch", c.ambient_batch);
    else if (key == "surface_batch") take(value, "surface_batch", c.surface_batch);
    else if (key == "lr") take(value, "lr", c.schedule.base_lr);
    else if (key == "lr_decay") take(value, "lr_decay", c.schedule.decay_factor);
    else if (key == "lr_decay_every") take(value, "lr_decay_every", c.schedule.decay_every);
    else if (key == "seed") take(value, "seed", c.seed);
    else if (key == "alpha_scale") take(value, "alpha_scale", c.alpha_scale);
    else if (key == "surface_loss") take(value, "surface_loss", c.use_surface_loss);
    else if (key == "boundary_weighting") take(value, "boundary_weighting", c.boundary_weighting);
    else if (key == "sigma_w") take(value, "sigma_w", c.sigma_w);
    else if (key == "surface_delta") take(value, "surface_delta", c.surface_delta);
    else if (key == "eps_lo") take(value, "eps_lo", c.eps_lo);
    else if (key == "eps_hi") take(value, "eps_hi", c.eps_hi);
    else if (key == "current_weight") take(value, "current_weight", c.current_weight);
    else if (key == "surface_weight") take(value, "surface_weight", c.surface_weight);
    else if (key == "chunk") take(value, "chunk", c.chunk);
    else if (key == "log_every") take(value, "log_every", c.log_every);
    else if (key == "field") {
      if (value.is_object() && value.contains("seed")) {
        throw InputError("config: field.seed is derived from the master seed; set 'seed' instead");
      }
      merge_json(c.field, value);
    }
    else if (key == "precision") {
      std::string name;
      take(value, "precision", name);
      c.precision = parse_precision(name);
    } else {
      throw InputError("config: unknown key '" + key + "'");
    }
  }
}

}  // namespace deepcurrents
