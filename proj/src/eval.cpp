#include "deepcurrents/eval.hpp"

#include <cmath>

#include <json.hpp>

#include "deepcurrents/errors.hpp"
#include "deepcurrents/parallel.hpp"

namespace deepcurrents {

UcdResult ucd(const TriangleMesh& gt, const TriangleMesh& recon, std::size_t n, Rng& rng) {
  if (gt.empty()) throw InputError("ucd: ground-truth mesh is empty");
  if (recon.empty()) throw InputError("ucd: reconstructed mesh is empty");
  if (n == 0) throw InputError("ucd: need at least one sample");
  const MeshAccel accel(recon);
  const auto samples = sample_surface(gt, n, rng);

  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks, 0.0);
  std::vector<double> squares(chunks, 0.0);
  parallel_for_chunks(chunks, [&](std::size_t c) {
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      const double d = accel.closest_point(samples[i].point).distance;
      sums[c] += d;
      squares[c] += d * d;
    }
  });
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    sum += sums[c];
    sum_sq += squares[c];
  }
  const auto count = static_cast<double>(n);
  const double mean = sum / count;
  const double var = n > 1 ? std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0)) : 0.0;
  return {mean, std::sqrt(var / count), n};
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j = {
      {"task", report.task},
      {"seed", report.seed},
      {"mass", report.mass},
      {"mass_standard_error", report.mass_standard_error},
      {"mass_samples", report.mass_samples},
      {"level", report.level},
      {"level_set_faces", report.level_set_faces},
      {"surface_vertices", report.surface_vertices},
      {"surface_faces", report.surface_faces},
      {"ablations", report.ablations},
  };
  if (report.ucd) {
    j["ucd"] = report.ucd->mean;
    j["ucd_standard_error"] = report.ucd->standard_error;
    j["ucd_samples"] = report.ucd->samples;
  }
  return j.dump(2);
}

}  // namespace deepcurrents
