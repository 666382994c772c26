#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "deepcurrents/field.hpp"
#include "deepcurrents/rng.hpp"

namespace testing {

namespace dc = deepcurrents;

inline double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline dc::FieldConfig tiny_config(std::uint64_t seed = 1) {
  dc::FieldConfig c;
  c.hidden_layers = 1;
  c.width = 8;
  c.frequencies = 16;
  c.seed = seed;
  return c;
}

/// f(x) = k * z through relu(z) - relu(-z): no-RFF input, one hidden layer
/// of width 2, relu.
inline dc::NeuralField linear_z_field(double k) {
  dc::FieldConfig c;
  c.hidden_layers = 1;
  c.width = 2;
  c.frequencies = 1;
  c.use_rff = false;
  c.activation = dc::Activation::relu;
  dc::NeuralField f = dc::NeuralField::init(c);
  std::vector<dc::DenseLayer> layers(2);
  layers[0].weight = Eigen::MatrixXd::Zero(2, 3);
  layers[0].weight(0, 2) = 1.0;
  layers[0].weight(1, 2) = -1.0;
  layers[0].bias = Eigen::VectorXd::Zero(2);
  layers[1].weight = Eigen::MatrixXd(1, 2);
  layers[1].weight << k, -k;
  layers[1].bias = Eigen::VectorXd::Zero(1);
  f.set_layers(layers);
  return f;
}

/// f(x) = c everywhere (all weights zero, output bias c).
inline dc::NeuralField constant_field(double c, bool use_rff = true) {
  dc::FieldConfig config = tiny_config();
  config.use_rff = use_rff;
  dc::NeuralField f = dc::NeuralField::init(config);
  f.params().setZero();
  f.params()[f.params().size() - 1] = c;
  return f;
}

}  // namespace testing
