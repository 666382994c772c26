#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "deepcurrents/geometry.hpp"

namespace deepcurrents {

enum class Activation { softplus, relu };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

struct FieldConfig {
  int hidden_layers = 3;
  int width = 256;
  /// Number of frequency rows m; the encoded feature vector has 2m entries.
  int frequencies = 1024;
  /// Standard deviation of the frequency entries.
  double rff_sigma = 2.0;
  /// When false the MLP consumes raw coordinates (ablation).
  bool use_rff = true;
  Activation activation = Activation::softplus;
  std::uint64_t seed = 0;

  int input_dim() const { return use_rff ? 2 * frequencies : 3; }
  /// Total length of the flattened parameter vector.
  std::size_t param_count() const;
  void validate() const;
};

/// Fixed random Fourier encoding x -> [cos(2 pi F x), sin(2 pi F x)].
struct FourierFeatures {
  Eigen::MatrixX3d frequencies;  // m x 3, not trained
  std::uint64_t seed = 0;

  static FourierFeatures sample(int m, double sigma, std::uint64_t seed);
  int dim() const { return 2 * static_cast<int>(frequencies.rows()); }
};

Eigen::VectorXd rff_encode(const FourierFeatures& features, const Vec3& x);
/// d(rff_encode)/dx, 2m x 3.
Eigen::MatrixX3d rff_jacobian(const FourierFeatures& features, const Vec3& x);

/// Structured copy of one affine layer, y = W x + b.
struct DenseLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// Scalar type used by the batched kernels. Single precision is roughly
/// twice as fast and is only used for training throughput; every reference
/// computation runs in double.
enum class Precision { float64, float32 };

/// Activations recorded by NeuralField::forward and consumed by backward.
/// Columns are stacked as [values | d/dx | d/dy | d/dz] when the tape
/// carries input tangents.
template <typename T>
struct FieldTape {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  Eigen::Index batch = 0;
  bool with_gradient = false;
  std::vector<Matrix> weights;
  std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>> biases;
  std::vector<Matrix> inputs;       // stacked input of each layer, inputs[0] = features
  std::vector<Matrix> preacts;      // stacked pre-activations of hidden layers
  std::vector<Matrix> slope;        // sigma'(a), hidden layers
  std::vector<Matrix> curvature;    // sigma''(a), hidden layers (gradient tapes only)

  Eigen::VectorXd value;     // f(x_i)
  Eigen::Matrix3Xd gradient; // grad_x f(x_i), empty unless with_gradient
};

/// f_theta : R^3 -> R, a Fourier-feature MLP with a flat parameter vector.
///
/// Layer l stores its weight matrix column-major followed by its bias.
/// Layers are input -> width -> ... -> width -> 1.
class NeuralField {
 public:
  NeuralField(FieldConfig config, FourierFeatures features, Eigen::VectorXd params);

  /// Frequencies ~ N(0, sigma^2); weights and biases uniform in +-1/sqrt(fan_in).
  static NeuralField init(const FieldConfig& config);

  const FieldConfig& config() const { return config_; }
  const FourierFeatures& features() const { return features_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }
  std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
  int layer_count() const { return static_cast<int>(shapes_.size()); }

  std::vector<DenseLayer> layers() const;
  void set_layers(const std::vector<DenseLayer>& layers);

  /// Encoded MLP input at x (RFF features, or x itself when RFF is off).
  Eigen::VectorXd encode(const Vec3& x) const;

  double eval(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;
  /// d/dtheta [upstream_f * f(x) + upstream_grad . grad_x f(x)].
  Eigen::VectorXd param_gradients(const Vec3& x, double upstream_f, const Vec3& upstream_grad) const;

  Eigen::VectorXd eval_batch(const Eigen::Matrix3Xd& x) const;
  Eigen::Matrix3Xd gradient_batch(const Eigen::Matrix3Xd& x) const;

  template <typename T>
  FieldTape<T> forward(const Eigen::Matrix3Xd& x, bool with_gradient) const;

  /// Accumulates d/dtheta sum_i [u_i f(x_i) + g_i . grad f(x_i)] into grad.
  /// upstream_gradient may be null (value channel only) and must be null for
  /// tapes recorded without gradients.
  template <typename T>
  void backward(const FieldTape<T>& tape, const Eigen::VectorXd& upstream_value,
                const Eigen::Matrix3Xd* upstream_gradient, Eigen::Ref<Eigen::VectorXd> grad) const;

 private:
  struct Shape {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index offset = 0;
  };

  FieldConfig config_;
  FourierFeatures features_;
  Eigen::VectorXd params_;
  std::vector<Shape> shapes_;
};

}  // namespace deepcurrents
