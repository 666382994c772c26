// deepcurrents command-line front end.
//
// Exit codes: 0 success, 2 bad configuration or input, 3 numerical failure,
// 1 anything else (I/O, internal errors).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "deepcurrents/commands.hpp"
#include "deepcurrents/config.hpp"
#include "deepcurrents/errors.hpp"
#include "deepcurrents/mesh_io.hpp"
#include "deepcurrents/parallel.hpp"

namespace dc = deepcurrents;

namespace {

// Flags that override the JSON config; unset optionals leave it alone.
struct TrainFlags {
  std::optional<std::int64_t> iterations;
  std::optional<std::size_t> ambient_batch;
  std::optional<std::size_t> surface_batch;
  std::optional<double> lr;
  std::optional<double> lr_decay;
  std::optional<std::int64_t> lr_decay_every;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha_scale;
  std::optional<double> sigma_w;
  std::optional<double> surface_delta;
  std::optional<double> eps_lo;
  std::optional<double> eps_hi;
  std::optional<double> current_weight;
  std::optional<double> surface_weight;
  std::optional<std::string> precision;
  std::optional<long> chunk;
  std::optional<std::int64_t> log_every;
  std::optional<int> hidden_layers;
  std::optional<int> width;
  std::optional<int> frequencies;
  std::optional<double> rff_sigma;
  std::optional<std::string> activation;
};

struct ExperimentFlags {
  std::string config_path;
  std::string input;
  std::string output_dir = ".";
  int resolution = 128;
  double threshold = 5e-3;
  std::size_t eval_samples = 100000;
  std::size_t mass_samples = 1000000;
  std::string format = "obj";
  std::optional<int> grid_resolution;
  bool quiet = false;
  dc::Ablations ablations;
  TrainFlags train;
};

void add_experiment_options(CLI::App* cmd, ExperimentFlags& f, dc::Task task) {
  const bool minimal = task == dc::Task::minimal;
  cmd->add_option("input", f.input, minimal ? "Boundary curve JSON" : "Target mesh (.obj or .ply)")->required();
  cmd->add_option("-o,--out", f.output_dir, "Output directory")->capture_default_str();
  cmd->add_option("--config", f.config_path, "JSON training config (flags override it)");
  cmd->add_option("--resolution", f.resolution, "Marching-cubes grid resolution per axis")->capture_default_str();
  cmd->add_option("--threshold", f.threshold, "Drop extracted vertices with |omega| below this")
      ->capture_default_str();
  cmd->add_option("--mass-samples", f.mass_samples, "Monte-Carlo samples for the mass report")
      ->capture_default_str();
  if (!minimal) {
    cmd->add_option("--eval-samples", f.eval_samples, "Ground-truth samples for the Chamfer distance")
        ->capture_default_str();
  }
  cmd->add_option("--format", f.format, "Mesh output format")->check(CLI::IsMember({"obj", "ply"}))
      ->capture_default_str();
  cmd->add_option("--grid", f.grid_resolution, "Also write the omega grid at this resolution");
  cmd->add_flag("-q,--quiet", f.quiet, "No progress output");

  auto& t = f.train;
  cmd->add_option("--iterations", t.iterations, minimal ? "Training steps [100000]" : "Training steps [10000]");
  cmd->add_option("--ambient-batch", t.ambient_batch,
                   minimal ? "Ambient samples per step [4096]" : "Ambient samples per step [4000]");
  if (!minimal) cmd->add_option("--surface-batch", t.surface_batch, "Surface samples per step [4000]");
  cmd->add_option("--lr", t.lr, minimal ? "Initial learning rate [0.0005]" : "Initial learning rate [0.001]");
  cmd->add_option("--lr-decay", t.lr_decay, "Learning-rate decay factor [0.6]");
  cmd->add_option("--lr-decay-every", t.lr_decay_every,
                  minimal ? "Steps between decays [10000]" : "Steps between decays [2000]");
  cmd->add_option("--seed", t.seed, "Master seed [0]");
  cmd->add_option("--alpha-scale", t.alpha_scale, "Scale applied to the Biot-Savart field [0.001]");
  if (!minimal) {
    cmd->add_option("--sigma-w", t.sigma_w, "Boundary weight width [0.1]");
    cmd->add_option("--surface-delta", t.surface_delta, "Surface loss margin [0.01]");
    cmd->add_option("--eps-lo", t.eps_lo, "Lower end of the surface offset range [0.0199]");
    cmd->add_option("--eps-hi", t.eps_hi, "Upper end of the surface offset range [0.0201]");
    cmd->add_option("--surface-weight", t.surface_weight, "Weight of the surface loss [1]");
  }
  cmd->add_option("--current-weight", t.current_weight, "Weight of the current loss [1]");
  cmd->add_option("--precision", t.precision, "Training arithmetic [float64]")
      ->check(CLI::IsMember({"float32", "float64"}));
  cmd->add_option("--chunk", t.chunk, "Samples per work item [512]");
  cmd->add_option("--log-every", t.log_every, "Progress interval in steps [100]");
  cmd->add_option("--hidden-layers", t.hidden_layers, "Hidden layers [3]");
  cmd->add_option("--width", t.width, "Hidden width [256]");
  cmd->add_option("--frequencies", t.frequencies, "Fourier frequency rows [1024]");
  cmd->add_option("--rff-sigma", t.rff_sigma, "Fourier frequency standard deviation [2]");
  cmd->add_option("--activation", t.activation, "Hidden activation [softplus]")
      ->check(CLI::IsMember({"softplus", "relu"}));

  cmd->add_flag("--no-rff", f.ablations.no_rff, "Ablation: feed raw coordinates to the MLP");
  cmd->add_flag("--relu", f.ablations.relu, "Ablation: ReLU instead of softplus");
  if (!minimal) {
    cmd->add_flag("--no-surface-loss", f.ablations.no_surface_loss, "Ablation: drop the surface loss");
    cmd->add_flag("--no-boundary-weighting", f.ablations.no_boundary_weighting,
                  "Ablation: unit metric weight everywhere");
  }
}

template <typename T, typename U>
void apply(const std::optional<T>& flag, U& field) {
  if (flag) field = static_cast<U>(*flag);
}

dc::ExperimentConfig build_config(const ExperimentFlags& f, dc::Task task) {
  auto config = dc::ExperimentConfig::defaults(task);
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw dc::InputError("cannot open config " + f.config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw dc::InputError(f.config_path + ": invalid JSON: " + e.what());
    }
    dc::merge_json(config.train, j);
  }
  const auto& t = f.train;
  auto& c = config.train;
  apply(t.iterations, c.iterations);
  apply(t.ambient_batch, c.ambient_batch);
  apply(t.surface_batch, c.surface_batch);
  apply(t.lr, c.schedule.base_lr);
  apply(t.lr_decay, c.schedule.decay_factor);
  apply(t.lr_decay_every, c.schedule.decay_every);
  apply(t.seed, c.seed);
  apply(t.alpha_scale, c.alpha_scale);
  apply(t.sigma_w, c.sigma_w);
  apply(t.surface_delta, c.surface_delta);
  apply(t.eps_lo, c.eps_lo);
  apply(t.eps_hi, c.eps_hi);
  apply(t.current_weight, c.current_weight);
  apply(t.surface_weight, c.surface_weight);
  apply(t.chunk, c.chunk);
  apply(t.log_every, c.log_every);
  apply(t.hidden_layers, c.field.hidden_layers);
  apply(t.width, c.field.width);
  apply(t.frequencies, c.field.frequencies);
  apply(t.rff_sigma, c.field.rff_sigma);
  if (t.precision) c.precision = *t.precision == "float32" ? dc::Precision::float32 : dc::Precision::float64;
  if (t.activation) c.field.activation = dc::parse_activation(*t.activation);

  config.input = f.input;
  config.output_dir = f.output_dir;
  config.resolution = f.resolution;
  config.filter_threshold = f.threshold;
  config.eval_samples = f.eval_samples;
  config.mass_samples = f.mass_samples;
  config.mesh_format = f.format == "ply" ? dc::MeshFormat::ply : dc::MeshFormat::obj;
  config.grid_resolution = f.grid_resolution;
  config.verbose = !f.quiet;
  config.ablations = f.ablations;
  return config;
}

void print_report(const dc::EvalReport& report) { std::cout << dc::report_to_json(report) << '\n'; }

int run(int argc, char** argv) {
  CLI::App app{"Minimal surfaces and open-surface reconstruction with neural currents"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // curve
  auto* curve = app.add_subcommand("curve", "Write a boundary curve JSON");
  std::string kind = "circle";
  int segments = 256;
  double scale = 1.0;
  std::string curve_out;
  curve->add_option("--kind", kind, "circle | trefoil | hopf | borromean")->capture_default_str();
  curve->add_option("--segments", segments, "Segments per loop (>= 12)")->capture_default_str();
  curve->add_option("--scale", scale, "Uniform scale")->capture_default_str();
  curve->add_option("-o,--out", curve_out, "Output JSON")->required();

  // minimal / reconstruct
  ExperimentFlags minimal_flags;
  auto* minimal = app.add_subcommand("minimal", "Minimal surface spanning a boundary curve");
  add_experiment_options(minimal, minimal_flags, dc::Task::minimal);
  ExperimentFlags recon_flags;
  auto* reconstruct = app.add_subcommand("reconstruct", "Fit an open surface to a target mesh");
  add_experiment_options(reconstruct, recon_flags, dc::Task::reconstruct);

  // extract
  auto* extract = app.add_subcommand("extract", "Extract the surface from a checkpoint");
  std::string ckpt;
  std::string extract_out;
  std::string level_set_out;
  int extract_resolution = 128;
  double extract_threshold = 5e-3;
  std::optional<int> grid_resolution;
  std::string grid_out;
  extract->add_option("checkpoint", ckpt, "Checkpoint file")->required();
  extract->add_option("-o,--out", extract_out, "Filtered surface (.obj or .ply)")->required();
  extract->add_option("--level-set", level_set_out, "Also write the unfiltered level set");
  extract->add_option("--resolution", extract_resolution, "Grid resolution per axis")->capture_default_str();
  extract->add_option("--threshold", extract_threshold, "Vertex filter threshold on |omega|")->capture_default_str();
  auto* grid_opt = extract->add_option("--grid", grid_resolution, "Write the omega grid at this resolution");
  extract->add_option("--grid-out", grid_out, "Raw grid path (sidecar gets .json appended)")->needs(grid_opt);

  // eval
  auto* eval = app.add_subcommand("eval", "Unidirectional Chamfer distance from gt to recon");
  std::string gt;
  std::string recon;
  std::size_t eval_samples = 100000;
  std::uint64_t eval_seed = 0;
  bool normalize = false;
  eval->add_option("gt", gt, "Ground-truth mesh")->required();
  eval->add_option("recon", recon, "Reconstructed mesh")->required();
  eval->add_option("--samples", eval_samples, "Samples on the ground truth")->capture_default_str();
  eval->add_option("--seed", eval_seed, "Sampling seed")->capture_default_str();
  eval->add_flag("--normalize", normalize, "Normalize gt to [-0.5, 0.5]^3 first");

  // mesh
  auto* mesh = app.add_subcommand("mesh", "Write a primitive test mesh");
  std::string shape = "hemisphere";
  int rings = 32;
  int sectors = 64;
  std::string mesh_out;
  mesh->add_option("--shape", shape, "hemisphere | sphere | disk | cylinder | cube")
      ->check(CLI::IsMember({"hemisphere", "sphere", "disk", "cylinder", "cube"}))
      ->capture_default_str();
  mesh->add_option("--rings", rings, "Latitude subdivisions")->capture_default_str();
  mesh->add_option("--sectors", sectors, "Longitude subdivisions")->capture_default_str();
  mesh->add_option("-o,--out", mesh_out, "Output mesh (.obj or .ply)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  dc::set_thread_count(threads);

  if (curve->parsed()) {
    dc::cmd_curve(dc::parse_curve_kind(kind), segments, scale, curve_out);
  } else if (minimal->parsed()) {
    print_report(dc::cmd_minimal(build_config(minimal_flags, dc::Task::minimal)).report);
  } else if (reconstruct->parsed()) {
    print_report(dc::cmd_reconstruct(build_config(recon_flags, dc::Task::reconstruct)).report);
  } else if (extract->parsed()) {
    const std::filesystem::path level_set(level_set_out);
    const auto ex = dc::cmd_extract(ckpt, extract_resolution, extract_threshold, extract_out,
                                    level_set_out.empty() ? nullptr : &level_set, grid_resolution,
                                    grid_out.empty() ? std::filesystem::path(extract_out).replace_extension(".f32")
                                                     : std::filesystem::path(grid_out));
    std::cout << nlohmann::json{{"level", ex.level},
                                {"level_set_faces", ex.level_set.faces.size()},
                                {"surface_vertices", ex.surface.mesh.vertices.size()},
                                {"surface_faces", ex.surface.mesh.faces.size()}}
                     .dump(2)
              << '\n';
  } else if (eval->parsed()) {
    const auto r = dc::cmd_eval(gt, recon, eval_samples, eval_seed, normalize);
    std::cout << nlohmann::json{{"ucd", r.mean}, {"ucd_standard_error", r.standard_error}, {"samples", r.samples},
                                {"seed", eval_seed}}
                     .dump(2)
              << '\n';
  } else if (mesh->parsed()) {
    if (rings < 1 || sectors < 3) throw dc::InputError("need rings >= 1 and sectors >= 3");
    dc::TriangleMesh m;
    if (shape == "hemisphere") m = dc::primitives::hemisphere(1.0, rings, sectors);
    else if (shape == "sphere") m = dc::primitives::uv_sphere(1.0, rings, sectors);
    else if (shape == "disk") m = dc::primitives::disk(1.0, rings, sectors);
    else if (shape == "cylinder") m = dc::primitives::cylinder(1.0, 2.0, rings, sectors);
    else m = dc::primitives::cube(dc::Vec3::Constant(-1.0), dc::Vec3::Constant(1.0));
    dc::export_mesh(m, mesh_out, dc::mesh_format_from_path(mesh_out));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dc::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const dc::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const dc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
