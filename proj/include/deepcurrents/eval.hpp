#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deepcurrents/geometry.hpp"
#include "deepcurrents/rng.hpp"

namespace deepcurrents {

struct UcdResult {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Unidirectional Chamfer distance: mean distance from n area-weighted
/// samples of `gt` to the surface `recon`.
UcdResult ucd(const TriangleMesh& gt, const TriangleMesh& recon, std::size_t n, Rng& rng);

struct EvalReport {
  std::string task;
  std::optional<UcdResult> ucd;
  std::uint64_t seed = 0;
  double mass = 0.0;
  double mass_standard_error = 0.0;
  std::size_t mass_samples = 0;
  double level = 0.0;
  std::size_t level_set_faces = 0;
  std::size_t surface_vertices = 0;
  std::size_t surface_faces = 0;
  std::vector<std::string> ablations;
};

std::string report_to_json(const EvalReport& report);

}  // namespace deepcurrents
