#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deepcurrents/eval.hpp"
#include "deepcurrents/extract.hpp"
#include "deepcurrents/geometry.hpp"
#include "deepcurrents/optim.hpp"

namespace deepcurrents {

struct Ablations {
  bool no_rff = false;
  bool relu = false;
  bool no_surface_loss = false;
  bool no_boundary_weighting = false;

  /// Names of the enabled toggles, for reports.
  std::vector<std::string> names() const;
};

/// Everything one training command needs. Build it from the task defaults,
/// then overlay a JSON config, then explicit flags.
struct ExperimentConfig {
  Task task = Task::minimal;
  /// Boundary curve JSON (minimal) or target mesh (reconstruct).
  std::filesystem::path input;
  std::filesystem::path output_dir = ".";
  TrainConfig train;
  Ablations ablations;
  int resolution = 128;
  double filter_threshold = 5e-3;
  std::size_t eval_samples = 100000;
  std::size_t mass_samples = 1000000;
  MeshFormat mesh_format = MeshFormat::obj;
  /// When set, also writes the omega grid at this resolution.
  std::optional<int> grid_resolution;
  /// Print progress every train.log_every iterations to stderr.
  bool verbose = true;

  static ExperimentConfig defaults(Task task);
  /// Applies the ablation toggles to `train` and checks consistency with the
  /// task. Throws InputError.
  TrainConfig resolved_train() const;
  void validate() const;
};

/// File names written into the output directory.
namespace outputs {
inline constexpr const char* checkpoint = "current.ckpt";
inline constexpr const char* loss_log = "loss.csv";
inline constexpr const char* report = "report.json";
inline constexpr const char* config = "config.json";
inline constexpr const char* level_set = "level_set";
inline constexpr const char* surface = "surface";
inline constexpr const char* target = "target_normalized";
inline constexpr const char* grid = "current_grid.f32";
}  // namespace outputs

struct RunResult {
  TrainResult training;
  Extraction extraction;
  EvalReport report;
};

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path);

/// Curve generation to a boundary JSON file.
void cmd_curve(CurveKind kind, int segments, double scale, const std::filesystem::path& out);

/// Mass minimization for the boundary in config.input; writes checkpoint,
/// loss log, extracted meshes and a mass report into config.output_dir.
RunResult cmd_minimal(const ExperimentConfig& config);

/// Normalizes the target in config.input, trains against it, extracts and
/// scores the result with the unidirectional Chamfer distance.
RunResult cmd_reconstruct(const ExperimentConfig& config);

/// Level-set extraction from a checkpoint.
Extraction cmd_extract(const std::filesystem::path& checkpoint, int resolution, double threshold,
                       const std::filesystem::path& out_mesh, const std::filesystem::path* level_set_mesh = nullptr,
                       std::optional<int> grid_resolution = std::nullopt,
                       const std::filesystem::path& grid_path = {});

/// Unidirectional Chamfer distance from gt samples to recon.
UcdResult cmd_eval(const std::filesystem::path& gt, const std::filesystem::path& recon, std::size_t samples,
                   std::uint64_t seed, bool normalize_gt);

}  // namespace deepcurrents
