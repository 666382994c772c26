#pragma once

#include <filesystem>

#include "deepcurrents/currents.hpp"

namespace deepcurrents {

/// Binary checkpoint: 8-byte magic "DCCKPT01", little-endian uint64 header
/// length, a JSON header (field config, alpha scale, loop sizes), then raw
/// little-endian float64 payload: frequency matrix (row-major m x 3),
/// parameter vector, boundary vertices. Round-trips bitwise.
void save_checkpoint(const NeuralCurrent& current, const std::filesystem::path& path);
NeuralCurrent load_checkpoint(const std::filesystem::path& path);

}  // namespace deepcurrents
