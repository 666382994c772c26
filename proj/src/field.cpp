#include "deepcurrents/field.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "deepcurrents/errors.hpp"
#include "deepcurrents/parallel.hpp"
#include "deepcurrents/rng.hpp"

namespace deepcurrents {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr Eigen::Index kEvalChunk = 2048;

template <typename T>
using Array = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic>;

/// sigma(a), sigma'(a) and, when requested, sigma''(a).
template <typename T>
void activate(Activation kind, const Array<T>& a, Array<T>& value, Array<T>& slope, Array<T>* curvature) {
  if (kind == Activation::relu) {
    value = a.max(T(0));
    slope = (a > T(0)).template cast<T>();
    if (curvature) curvature->setZero(a.rows(), a.cols());
    return;
  }
  // softplus(a) = max(a, 0) + log1p(exp(-|a|)), linear asymptote for large |a|.
  const Array<T> e = (-a.abs()).exp();
  value = a.max(T(0)) + e.log1p();
  const Array<T> inv = (T(1) + e).inverse();
  // sigmoid(a), written without select() so it vectorizes.
  slope = inv * (e + (a >= T(0)).template cast<T>() * (T(1) - e));
  if (curvature) *curvature = slope * (T(1) - slope);
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "softplus") return Activation::softplus;
  if (name == "relu") return Activation::relu;
  throw InputError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "softplus"; }

std::size_t FieldConfig::param_count() const {
  std::size_t total = 0;
  std::size_t in = static_cast<std::size_t>(input_dim());
  for (int l = 0; l < hidden_layers; ++l) {
    total += in * static_cast<std::size_t>(width) + static_cast<std::size_t>(width);
    in = static_cast<std::size_t>(width);
  }
  return total + in + 1;
}

void FieldConfig::validate() const {
  if (hidden_layers < 1 || width < 1 || frequencies < 1) {
    throw InputError("field config: hidden layers, width and frequency count must all be >= 1");
  }
  if (!(rff_sigma >= 0.0)) throw InputError("field config: rff sigma must be non-negative");
}

FourierFeatures FourierFeatures::sample(int m, double sigma, std::uint64_t seed) {
  FourierFeatures f;
  f.seed = seed;
  f.frequencies.resize(m, 3);
  Rng rng(seed, "rff");
  // Row-major draw order so the matrix does not depend on storage order.
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < 3; ++k) f.frequencies(i, k) = sigma * rng.normal();
  }
  return f;
}

Eigen::VectorXd rff_encode(const FourierFeatures& features, const Vec3& x) {
  const Eigen::VectorXd phase = kTwoPi * (features.frequencies * x);
  Eigen::VectorXd out(2 * phase.size());
  out << phase.array().cos().matrix(), phase.array().sin().matrix();
  return out;
}

Eigen::MatrixX3d rff_jacobian(const FourierFeatures& features, const Vec3& x) {
  const Eigen::Index m = features.frequencies.rows();
  const Eigen::ArrayXd phase = kTwoPi * (features.frequencies * x).array();
  Eigen::MatrixX3d jac(2 * m, 3);
  for (int k = 0; k < 3; ++k) {
    const Eigen::ArrayXd w = kTwoPi * features.frequencies.col(k).array();
    jac.col(k).head(m) = -(phase.sin() * w).matrix();
    jac.col(k).tail(m) = (phase.cos() * w).matrix();
  }
  return jac;
}

// ---------------------------------------------------------------------------

NeuralField::NeuralField(FieldConfig config, FourierFeatures features, Eigen::VectorXd params)
    : config_(config), features_(std::move(features)), params_(std::move(params)) {
  config_.validate();
  if (config_.use_rff && features_.frequencies.rows() != config_.frequencies) {
    throw InputError("field: frequency matrix has " + std::to_string(features_.frequencies.rows()) +
                     " rows, config expects " + std::to_string(config_.frequencies));
  }
  if (static_cast<std::size_t>(params_.size()) != config_.param_count()) {
    throw InputError("field: parameter vector has " + std::to_string(params_.size()) + " entries, config expects " +
                     std::to_string(config_.param_count()));
  }
  Eigen::Index in = config_.input_dim();
  Eigen::Index offset = 0;
  for (int l = 0; l <= config_.hidden_layers; ++l) {
    const Eigen::Index out = l == config_.hidden_layers ? 1 : config_.width;
    shapes_.push_back({out, in, offset});
    offset += out * in + out;
    in = out;
  }
}

NeuralField NeuralField::init(const FieldConfig& config) {
  config.validate();
  FourierFeatures features;
  features.seed = config.seed;
  if (config.use_rff) features = FourierFeatures::sample(config.frequencies, config.rff_sigma, config.seed);

  Eigen::VectorXd params(static_cast<Eigen::Index>(config.param_count()));
  Rng rng(config.seed, "init");
  Eigen::Index offset = 0;
  Eigen::Index in = config.input_dim();
  for (int l = 0; l <= config.hidden_layers; ++l) {
    const Eigen::Index out = l == config.hidden_layers ? 1 : config.width;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index i = 0; i < out * in + out; ++i) params[offset + i] = rng.uniform(-bound, bound);
    offset += out * in + out;
    in = out;
  }
  return NeuralField(config, std::move(features), std::move(params));
}

std::vector<DenseLayer> NeuralField::layers() const {
  std::vector<DenseLayer> out;
  for (const auto& s : shapes_) {
    out.push_back({Eigen::Map<const Eigen::MatrixXd>(params_.data() + s.offset, s.rows, s.cols),
                   Eigen::Map<const Eigen::VectorXd>(params_.data() + s.offset + s.rows * s.cols, s.rows)});
  }
  return out;
}

void NeuralField::set_layers(const std::vector<DenseLayer>& layers) {
  if (layers.size() != shapes_.size()) throw InputError("field: wrong number of layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = shapes_[l];
    if (layers[l].weight.rows() != s.rows || layers[l].weight.cols() != s.cols || layers[l].bias.size() != s.rows) {
      throw InputError("field: layer " + std::to_string(l) + " has the wrong shape");
    }
    Eigen::Map<Eigen::MatrixXd>(params_.data() + s.offset, s.rows, s.cols) = layers[l].weight;
    Eigen::Map<Eigen::VectorXd>(params_.data() + s.offset + s.rows * s.cols, s.rows) = layers[l].bias;
  }
}

Eigen::VectorXd NeuralField::encode(const Vec3& x) const {
  if (config_.use_rff) return rff_encode(features_, x);
  return x;
}

template <typename T>
FieldTape<T> NeuralField::forward(const Eigen::Matrix3Xd& x, bool with_gradient) const {
  using Matrix = typename FieldTape<T>::Matrix;
  FieldTape<T> tape;
  const Eigen::Index batch = x.cols();
  const Eigen::Index stack = with_gradient ? 4 : 1;
  tape.batch = batch;
  tape.with_gradient = with_gradient;

  for (const auto& s : shapes_) {
    tape.weights.push_back(Eigen::Map<const Eigen::MatrixXd>(params_.data() + s.offset, s.rows, s.cols).cast<T>());
    tape.biases.push_back(
        Eigen::Map<const Eigen::VectorXd>(params_.data() + s.offset + s.rows * s.cols, s.rows).cast<T>());
  }

  Matrix input(config_.input_dim(), stack * batch);
  if (config_.use_rff) {
    const Eigen::Index m = features_.frequencies.rows();
    // Reduce phases modulo one cycle in double before the trig calls, so the
    // single-precision path keeps full phase accuracy.
    const Eigen::ArrayXXd cycles = (features_.frequencies * x).array();
    const Array<T> phase = (kTwoPi * (cycles - cycles.rint())).template cast<T>();
    const Array<T> c = phase.cos();
    const Array<T> s = phase.sin();
    input.topLeftCorner(m, batch) = c.matrix();
    input.bottomLeftCorner(m, batch) = s.matrix();
    if (with_gradient) {
      for (Eigen::Index k = 0; k < 3; ++k) {
        const Eigen::Array<T, Eigen::Dynamic, 1> w = (kTwoPi * features_.frequencies.col(k)).template cast<T>().array();
        input.block(0, (k + 1) * batch, m, batch) = (-(s.colwise() * w)).matrix();
        input.block(m, (k + 1) * batch, m, batch) = (c.colwise() * w).matrix();
      }
    }
  } else {
    input.leftCols(batch) = x.cast<T>();
    if (with_gradient) {
      input.rightCols(3 * batch).setZero();
      for (Eigen::Index k = 0; k < 3; ++k) input.row(k).segment((k + 1) * batch, batch).setOnes();
    }
  }
  tape.inputs.push_back(std::move(input));

  const int hidden = config_.hidden_layers;
  for (int l = 0; l < hidden; ++l) {
    Matrix z = tape.weights[l] * tape.inputs[l];
    z.leftCols(batch).colwise() += tape.biases[l];
    Array<T> value;
    Array<T> slope;
    Array<T> curvature;
    activate<T>(config_.activation, z.leftCols(batch).array(), value, slope, with_gradient ? &curvature : nullptr);
    Matrix next(z.rows(), stack * batch);
    next.leftCols(batch) = value.matrix();
    for (Eigen::Index k = 1; k < stack; ++k) {
      next.middleCols(k * batch, batch) = (z.middleCols(k * batch, batch).array() * slope).matrix();
    }
    tape.slope.push_back(slope.matrix());
    if (with_gradient) tape.curvature.push_back(curvature.matrix());
    tape.preacts.push_back(std::move(z));
    tape.inputs.push_back(std::move(next));
  }

  const Eigen::Matrix<T, 1, Eigen::Dynamic> out = tape.weights[hidden] * tape.inputs[hidden];
  tape.value = (out.leftCols(batch).array() + tape.biases[hidden](0)).template cast<double>().transpose();
  if (with_gradient) {
    tape.gradient.resize(3, batch);
    for (Eigen::Index k = 0; k < 3; ++k) {
      tape.gradient.row(k) = out.middleCols((k + 1) * batch, batch).template cast<double>();
    }
  }
  return tape;
}

template <typename T>
void NeuralField::backward(const FieldTape<T>& tape, const Eigen::VectorXd& upstream_value,
                           const Eigen::Matrix3Xd* upstream_gradient, Eigen::Ref<Eigen::VectorXd> grad) const {
  using Matrix = typename FieldTape<T>::Matrix;
  const Eigen::Index batch = tape.batch;
  if (upstream_gradient && !tape.with_gradient) {
    throw std::logic_error("backward: gradient upstream requires a tape recorded with gradients");
  }
  if (upstream_value.size() != batch || (upstream_gradient && upstream_gradient->cols() != batch)) {
    throw std::logic_error("backward: upstream size does not match the tape");
  }
  // A gradient tape without a gradient upstream still has stacked columns;
  // zero adjoints keep the layout uniform.
  const Eigen::Index stack = tape.with_gradient ? 4 : 1;
  const int hidden = config_.hidden_layers;

  Eigen::Matrix<T, 1, Eigen::Dynamic> seed(stack * batch);
  seed.leftCols(batch) = upstream_value.transpose().cast<T>();
  for (Eigen::Index k = 1; k < stack; ++k) {
    if (upstream_gradient) {
      seed.middleCols(k * batch, batch) = upstream_gradient->row(k - 1).cast<T>();
    } else {
      seed.middleCols(k * batch, batch).setZero();
    }
  }

  auto accumulate = [&](int layer, const Matrix& dweight, const Eigen::Matrix<T, Eigen::Dynamic, 1>& dbias) {
    const auto& s = shapes_[static_cast<std::size_t>(layer)];
    Eigen::Map<Eigen::MatrixXd>(grad.data() + s.offset, s.rows, s.cols) += dweight.template cast<double>();
    Eigen::Map<Eigen::VectorXd>(grad.data() + s.offset + s.rows * s.cols, s.rows) += dbias.template cast<double>();
  };

  accumulate(hidden, seed * tape.inputs[hidden].transpose(),
             Eigen::Matrix<T, 1, 1>(seed.leftCols(batch).sum()));
  Matrix adjoint = tape.weights[hidden].transpose() * seed;

  for (int l = hidden - 1; l >= 0; --l) {
    const auto slope = tape.slope[l].array();
    Matrix dz(adjoint.rows(), stack * batch);
    dz.leftCols(batch) = (slope * adjoint.leftCols(batch).array()).matrix();
    if (stack > 1) {
      Array<T> mixed = Array<T>::Zero(adjoint.rows(), batch);
      for (Eigen::Index k = 1; k < stack; ++k) {
        const auto tangent_adj = adjoint.middleCols(k * batch, batch).array();
        mixed += tape.preacts[l].middleCols(k * batch, batch).array() * tangent_adj;
        dz.middleCols(k * batch, batch) = (slope * tangent_adj).matrix();
      }
      dz.leftCols(batch).array() += tape.curvature[l].array() * mixed;
    }
    accumulate(l, dz * tape.inputs[l].transpose(), dz.leftCols(batch).rowwise().sum());
    if (l > 0) adjoint = tape.weights[l].transpose() * dz;
  }
}

template FieldTape<double> NeuralField::forward<double>(const Eigen::Matrix3Xd&, bool) const;
template FieldTape<float> NeuralField::forward<float>(const Eigen::Matrix3Xd&, bool) const;
template void NeuralField::backward<double>(const FieldTape<double>&, const Eigen::VectorXd&, const Eigen::Matrix3Xd*,
                                            Eigen::Ref<Eigen::VectorXd>) const;
template void NeuralField::backward<float>(const FieldTape<float>&, const Eigen::VectorXd&, const Eigen::Matrix3Xd*,
                                           Eigen::Ref<Eigen::VectorXd>) const;

double NeuralField::eval(const Vec3& x) const { return forward<double>(x, false).value[0]; }

Vec3 NeuralField::gradient(const Vec3& x) const { return forward<double>(x, true).gradient.col(0); }

Eigen::VectorXd NeuralField::param_gradients(const Vec3& x, double upstream_f, const Vec3& upstream_grad) const {
  const auto tape = forward<double>(x, true);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  const Eigen::Matrix3Xd g = upstream_grad;
  backward(tape, Eigen::VectorXd::Constant(1, upstream_f), &g, grad);
  return grad;
}

Eigen::VectorXd NeuralField::eval_batch(const Eigen::Matrix3Xd& x) const {
  Eigen::VectorXd out(x.cols());
  const auto chunks = static_cast<std::size_t>((x.cols() + kEvalChunk - 1) / kEvalChunk);
  parallel_for_chunks(chunks, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kEvalChunk;
    const Eigen::Index n = std::min(kEvalChunk, x.cols() - begin);
    out.segment(begin, n) = forward<double>(x.middleCols(begin, n), false).value;
  });
  return out;
}

Eigen::Matrix3Xd NeuralField::gradient_batch(const Eigen::Matrix3Xd& x) const {
  Eigen::Matrix3Xd out(3, x.cols());
  const auto chunks = static_cast<std::size_t>((x.cols() + kEvalChunk - 1) / kEvalChunk);
  parallel_for_chunks(chunks, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kEvalChunk;
    const Eigen::Index n = std::min(kEvalChunk, x.cols() - begin);
    out.middleCols(begin, n) = forward<double>(x.middleCols(begin, n), true).gradient;
  });
  return out;
}

}  // namespace deepcurrents
