#include "deepcurrents/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "deepcurrents/checkpoint.hpp"
#include "deepcurrents/config.hpp"
#include "deepcurrents/errors.hpp"
#include "deepcurrents/rng.hpp"

namespace deepcurrents {

std::vector<std::string> Ablations::names() const {
  std::vector<std::string> out;
  if (no_rff) out.emplace_back("no_rff");
  if (relu) out.emplace_back("relu");
  if (no_surface_loss) out.emplace_back("no_surface_loss");
  if (no_boundary_weighting) out.emplace_back("no_boundary_weighting");
  return out;
}

ExperimentConfig ExperimentConfig::defaults(Task task) {
  ExperimentConfig c;
  c.task = task;
  c.train = task == Task::minimal ? TrainConfig::minimal_defaults() : TrainConfig::reconstruction_defaults();
  return c;
}

TrainConfig ExperimentConfig::resolved_train() const {
  TrainConfig t = train;
  if (ablations.no_rff) t.field.use_rff = false;
  if (ablations.relu) t.field.activation = Activation::relu;
  if (task == Task::minimal) {
    if (ablations.no_surface_loss) throw InputError("--no-surface-loss only applies to the reconstruct task");
    if (ablations.no_boundary_weighting) {
      throw InputError("--no-boundary-weighting only applies to the reconstruct task");
    }
  }
  if (ablations.no_surface_loss) t.use_surface_loss = false;
  if (ablations.no_boundary_weighting) t.boundary_weighting = false;
  return t;
}

void ExperimentConfig::validate() const {
  if (input.empty()) throw InputError("no input file given");
  if (resolution < 2) throw InputError("resolution must be >= 2");
  if (!(filter_threshold >= 0.0)) throw InputError("filter threshold must be non-negative");
  if (eval_samples < 1) throw InputError("eval sample count must be >= 1");
  if (mass_samples < 1) throw InputError("mass sample count must be >= 1");
  if (grid_resolution && *grid_resolution < 2) throw InputError("grid resolution must be >= 2");
  resolved_train().validate(task);
}

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "iteration,lr,current_loss,surface_loss,mass_estimate\n";
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(r.iteration), r.lr,
                  r.current_loss, r.surface_loss, r.mass_estimate);
    out << line;
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void cmd_curve(CurveKind kind, int segments, double scale, const std::filesystem::path& out) {
  save_curve(generate_curve(kind, segments, scale), out);
}

namespace {

std::string mesh_name(const char* stem, MeshFormat format) {
  return std::string(stem) + (format == MeshFormat::obj ? ".obj" : ".ply");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

TrainCallback progress(const ExperimentConfig& config) {
  if (!config.verbose) return {};
  return [](const LossRecord& r) {
    std::fprintf(stderr, "iter %7lld  lr %.3g  current %.6g  surface %.6g  mass~ %.6g\n",
                 static_cast<long long>(r.iteration), r.lr, r.current_loss, r.surface_loss, r.mass_estimate);
  };
}

void prepare_output(const ExperimentConfig& config, const TrainConfig& train) {
  std::filesystem::create_directories(config.output_dir);
  nlohmann::json echo = {
      {"task", config.task == Task::minimal ? "minimal" : "reconstruct"},
      {"input", config.input.string()},
      {"resolution", config.resolution},
      {"filter_threshold", config.filter_threshold},
      {"eval_samples", config.eval_samples},
      {"mass_samples", config.mass_samples},
      {"ablations", config.ablations.names()},
      {"train", to_json(train)},
  };
  write_text(config.output_dir / outputs::config, echo.dump(2));
}

// Writes everything common to both tasks after training.
RunResult finish(const ExperimentConfig& config, TrainResult training, const MetricSpec& mass_metric) {
  const auto& dir = config.output_dir;
  save_checkpoint(training.current, dir / outputs::checkpoint);
  write_loss_csv(training.history, dir / outputs::loss_log);

  RunResult run{std::move(training), {}, {}};
  run.extraction = extract_surface(run.training.current, config.resolution, config.filter_threshold);
  export_mesh(run.extraction.level_set, dir / mesh_name(outputs::level_set, config.mesh_format), config.mesh_format);
  export_mesh(run.extraction.surface.mesh, dir / mesh_name(outputs::surface, config.mesh_format), config.mesh_format);
  if (config.grid_resolution) export_current_grid(run.training.current, *config.grid_resolution, dir / outputs::grid);

  auto& report = run.report;
  report.task = config.task == Task::minimal ? "minimal" : "reconstruct";
  report.seed = config.train.seed;
  report.ablations = config.ablations.names();
  Rng mass_rng(config.train.seed, "mass");
  const MassEstimate mass = mass_estimate(run.training.current, mass_metric, config.mass_samples, mass_rng);
  report.mass = mass.estimate;
  report.mass_standard_error = mass.standard_error;
  report.mass_samples = config.mass_samples;
  report.level = run.extraction.level;
  report.level_set_faces = run.extraction.level_set.faces.size();
  report.surface_vertices = run.extraction.surface.mesh.vertices.size();
  report.surface_faces = run.extraction.surface.mesh.faces.size();
  return run;
}

}  // namespace

RunResult cmd_minimal(const ExperimentConfig& config) {
  if (config.task != Task::minimal) throw InputError("cmd_minimal needs a minimal-task config");
  config.validate();
  const TrainConfig train = config.resolved_train();
  const BoundaryCurve boundary = load_curve(config.input);
  prepare_output(config, train);
  RunResult run = finish(config, train_minimal_surface(boundary, train, progress(config)), MetricSpec::euclidean());
  write_text(config.output_dir / outputs::report, report_to_json(run.report));
  return run;
}

RunResult cmd_reconstruct(const ExperimentConfig& config) {
  if (config.task != Task::reconstruct) throw InputError("cmd_reconstruct needs a reconstruct-task config");
  config.validate();
  const TrainConfig train = config.resolved_train();
  MeshLoadStats stats;
  const TriangleMesh raw = load_mesh(config.input, &stats);
  for (const auto& w : stats.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const TriangleMesh target = normalize_mesh(raw).first;
  if (extract_boundary_loops(target).empty()) {
    throw InputError(config.input.string() +
                     " is a closed mesh; reconstruction needs an open surface with at least one boundary loop");
  }
  prepare_output(config, train);
  export_mesh(target, config.output_dir / mesh_name(outputs::target, config.mesh_format), config.mesh_format);

  // The mass is reported in the Euclidean metric so that runs with and
  // without ablations are comparable.
  RunResult run = finish(config, train_reconstruction(target, train, progress(config)), MetricSpec::euclidean());
  if (!run.extraction.surface.mesh.empty()) {
    Rng eval_rng(config.train.seed, "eval");
    run.report.ucd = ucd(target, run.extraction.surface.mesh, config.eval_samples, eval_rng);
  } else {
    std::fprintf(stderr, "warning: the extracted surface is empty; no distance reported\n");
  }
  write_text(config.output_dir / outputs::report, report_to_json(run.report));
  return run;
}

Extraction cmd_extract(const std::filesystem::path& checkpoint, int resolution, double threshold,
                       const std::filesystem::path& out_mesh, const std::filesystem::path* level_set_mesh,
                       std::optional<int> grid_resolution, const std::filesystem::path& grid_path) {
  if (resolution < 2) throw InputError("resolution must be >= 2");
  if (!(threshold >= 0.0)) throw InputError("filter threshold must be non-negative");
  const MeshFormat format = mesh_format_from_path(out_mesh);
  const NeuralCurrent current = load_checkpoint(checkpoint);
  Extraction ex = extract_surface(current, resolution, threshold);
  export_mesh(ex.surface.mesh, out_mesh, format);
  if (level_set_mesh) export_mesh(ex.level_set, *level_set_mesh, mesh_format_from_path(*level_set_mesh));
  if (grid_resolution) export_current_grid(current, *grid_resolution, grid_path);
  return ex;
}

UcdResult cmd_eval(const std::filesystem::path& gt, const std::filesystem::path& recon, std::size_t samples,
                   std::uint64_t seed, bool normalize_gt) {
  TriangleMesh truth = load_mesh(gt);
  if (normalize_gt) truth = normalize_mesh(truth).first;
  const TriangleMesh reconstruction = load_mesh(recon);
  Rng rng(seed, "eval");
  return ucd(truth, reconstruction, samples, rng);
}

}  // namespace deepcurrents
