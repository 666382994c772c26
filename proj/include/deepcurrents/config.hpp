#pragma once

#include <json.hpp>

#include "deepcurrents/field.hpp"
#include "deepcurrents/optim.hpp"

namespace deepcurrents {

nlohmann::json to_json(const FieldConfig& config);
nlohmann::json to_json(const TrainConfig& config);

/// Overrides the fields of `config` that appear in `j`; unknown keys are
/// rejected with InputError.
void merge_json(FieldConfig& config, const nlohmann::json& j);
void merge_json(TrainConfig& config, const nlohmann::json& j);

}  // namespace deepcurrents
