#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "deepbarrier/rng.hpp"

namespace deepbarrier {

enum class BnMode { none, input_only, every_layer };
enum class BnPhase { training, inference };

std::string_view to_string(BnMode mode);
/// Accepts "none", "input-only", "every-layer".
BnMode parse_bn_mode(std::string_view name);

/// Shape of the shared Z-network: input_dim -> hidden_layers x hidden_width
/// (Elu) -> output_dim. With batch normalization, every normalized layer has
/// its own (gamma, beta) for each of the n_time_steps time indices.
struct NetworkSpec {
  int input_dim = 2;
  int hidden_layers = 1;
  int hidden_width = 21;
  int output_dim = 1;
  BnMode bn_mode = BnMode::none;
  int n_time_steps = 1;

  void validate() const {
    if (input_dim < 1 || hidden_layers < 1 || hidden_width < 1 || output_dim < 1 || n_time_steps < 1) {
      throw std::invalid_argument("NetworkSpec: all dimensions must be >= 1");
    }
  }

  int dense_layers() const { return hidden_layers + 1; }
  int layer_inputs(int l) const { return l == 0 ? input_dim : hidden_width; }
  int layer_outputs(int l) const { return l == hidden_layers ? output_dim : hidden_width; }

  /// Normalized layers: index 0 is the network input, index k >= 1 is the
  /// pre-activation of hidden layer k - 1.
  int bn_layers() const {
    switch (bn_mode) {
      case BnMode::none: return 0;
      case BnMode::input_only: return 1;
      case BnMode::every_layer: return 1 + hidden_layers;
    }
    return 0;
  }
  int bn_dim(int k) const { return k == 0 ? input_dim : hidden_width; }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct BatchNormConfig {
  double epsilon = 1e-5;
  double momentum = 0.99;

  friend bool operator==(const BatchNormConfig&, const BatchNormConfig&) = default;
};

// ---------------------------------------------------------------------------
// Activation

template <typename Scalar>
Scalar elu(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? x : exp(x) - Scalar(1);
}

template <typename Scalar>
Scalar elu_derivative(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? Scalar(1) : exp(x);
}

// ---------------------------------------------------------------------------
// Batch normalization. Rows are features, columns are batch samples.

template <typename Scalar>
struct BatchNormCache {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  BnPhase phase = BnPhase::training;
  Matrix normalized;  // x_hat
  Vector inv_std;
  Vector batch_mean;  // training only
  Vector batch_var;   // training only, biased
};

template <typename Scalar>
struct BatchNormGrad {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> input;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gamma;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> beta;
};

/// Training-mode normalization with batch statistics. Writes the cache
/// needed by batchnorm_backward. Throws std::invalid_argument for a batch of
/// fewer than two samples.
template <typename Derived, typename GammaT, typename BetaT>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> batchnorm_forward_train(
    const Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<GammaT>& gamma,
    const Eigen::MatrixBase<BetaT>& beta, typename Derived::Scalar epsilon,
    BatchNormCache<typename Derived::Scalar>& cache) {
  using Scalar = typename Derived::Scalar;
  if (x.cols() < 2) throw std::invalid_argument("batch normalization needs a batch of at least 2 in training");
  cache.phase = BnPhase::training;
  cache.batch_mean = x.rowwise().mean();
  cache.normalized = x.colwise() - cache.batch_mean;
  cache.batch_var = cache.normalized.array().square().rowwise().mean().matrix();
  cache.inv_std = (cache.batch_var.array() + epsilon).rsqrt().matrix();
  cache.normalized.array().colwise() *= cache.inv_std.array();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> y =
      ((cache.normalized.array().colwise() * gamma.array()).colwise() + beta.array()).matrix();
  return y;
}

/// Inference-mode normalization with running statistics.
template <typename Derived, typename GammaT, typename BetaT, typename MeanT, typename VarT>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> batchnorm_forward_inference(
    const Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<GammaT>& gamma,
    const Eigen::MatrixBase<BetaT>& beta, const Eigen::MatrixBase<MeanT>& running_mean,
    const Eigen::MatrixBase<VarT>& running_var, typename Derived::Scalar epsilon,
    BatchNormCache<typename Derived::Scalar>& cache) {
  using Scalar = typename Derived::Scalar;
  cache.phase = BnPhase::inference;
  cache.inv_std = (running_var.array() + epsilon).rsqrt().matrix();
  cache.normalized = ((x.colwise() - running_mean).array().colwise() * cache.inv_std.array()).matrix();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> y =
      ((cache.normalized.array().colwise() * gamma.array()).colwise() + beta.array()).matrix();
  return y;
}

/// Exact gradients of batch normalization. In training phase the batch mean
/// and variance depend on every sample, which couples the columns.
template <typename DerivedDy, typename GammaT>
BatchNormGrad<typename DerivedDy::Scalar> batchnorm_backward(
    const Eigen::MatrixBase<DerivedDy>& dy, const BatchNormCache<typename DerivedDy::Scalar>& cache,
    const Eigen::MatrixBase<GammaT>& gamma) {
  using Scalar = typename DerivedDy::Scalar;
  BatchNormGrad<Scalar> g;
  g.beta = dy.rowwise().sum();
  g.gamma = (dy.array() * cache.normalized.array()).rowwise().sum().matrix();
  const auto dx_hat = (dy.array().colwise() * gamma.array()).eval();
  if (cache.phase == BnPhase::inference) {
    g.input = (dx_hat.colwise() * cache.inv_std.array()).matrix();
    return g;
  }
  const Scalar m = static_cast<Scalar>(dy.cols());
  const auto sum_dx_hat = dx_hat.rowwise().sum().eval();
  const auto sum_dx_hat_xhat = (dx_hat * cache.normalized.array()).rowwise().sum().eval();
  g.input = (((m * dx_hat).colwise() - sum_dx_hat - cache.normalized.array().colwise() * sum_dx_hat_xhat)
                 .colwise() *
             (cache.inv_std.array() / m))
                .matrix();
  return g;
}

// ---------------------------------------------------------------------------
// Network parameters

/// All trainable parameters live in one flat vector (so optimizers and
/// finite-difference checks can treat them uniformly); typed views are
/// provided by offset. Layout: per dense layer W (col-major) then b; per
/// normalized layer and time index gamma then beta; then y0, z0.
template <typename Scalar>
class NetworkT {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit NetworkT(NetworkSpec spec, BatchNormConfig bn = {}) : spec_(spec), bn_(bn) {
    spec_.validate();
    Eigen::Index offset = 0;
    for (int l = 0; l < spec_.dense_layers(); ++l) {
      weight_offsets_.push_back(offset);
      offset += Eigen::Index(spec_.layer_outputs(l)) * spec_.layer_inputs(l);
      bias_offsets_.push_back(offset);
      offset += spec_.layer_outputs(l);
    }
    for (int k = 0; k < spec_.bn_layers(); ++k) {
      bn_offsets_.push_back(offset);
      offset += Eigen::Index(2) * spec_.bn_dim(k) * spec_.n_time_steps;
      running_mean_.push_back(Matrix::Zero(spec_.bn_dim(k), spec_.n_time_steps));
      running_var_.push_back(Matrix::Ones(spec_.bn_dim(k), spec_.n_time_steps));
    }
    y0_offset_ = offset++;
    z0_offset_ = offset++;
    params_ = Vector::Zero(offset);
    for (int k = 0; k < spec_.bn_layers(); ++k) {
      for (int t = 0; t < spec_.n_time_steps; ++t) bn_gamma(k, t).setOnes();
    }
  }

  const NetworkSpec& spec() const { return spec_; }
  const BatchNormConfig& bn_config() const { return bn_; }

  Eigen::Index parameter_count() const { return params_.size(); }
  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  Eigen::Index weight_offset(int l) const { return weight_offsets_.at(l); }
  Eigen::Index bias_offset(int l) const { return bias_offsets_.at(l); }
  Eigen::Index bn_gamma_offset(int k, int t) const {
    check_time(t);
    return bn_offsets_.at(k) + Eigen::Index(2) * spec_.bn_dim(k) * t;
  }
  Eigen::Index bn_beta_offset(int k, int t) const { return bn_gamma_offset(k, t) + spec_.bn_dim(k); }
  Eigen::Index y0_offset() const { return y0_offset_; }
  Eigen::Index z0_offset() const { return z0_offset_; }

  Eigen::Map<Matrix> weight(int l) {
    return {params_.data() + weight_offset(l), spec_.layer_outputs(l), spec_.layer_inputs(l)};
  }
  Eigen::Map<const Matrix> weight(int l) const {
    return {params_.data() + weight_offset(l), spec_.layer_outputs(l), spec_.layer_inputs(l)};
  }
  Eigen::Map<Vector> bias(int l) { return {params_.data() + bias_offset(l), spec_.layer_outputs(l)}; }
  Eigen::Map<const Vector> bias(int l) const {
    return {params_.data() + bias_offset(l), spec_.layer_outputs(l)};
  }
  Eigen::Map<Vector> bn_gamma(int k, int t) { return {params_.data() + bn_gamma_offset(k, t), spec_.bn_dim(k)}; }
  Eigen::Map<const Vector> bn_gamma(int k, int t) const {
    return {params_.data() + bn_gamma_offset(k, t), spec_.bn_dim(k)};
  }
  Eigen::Map<Vector> bn_beta(int k, int t) { return {params_.data() + bn_beta_offset(k, t), spec_.bn_dim(k)}; }
  Eigen::Map<const Vector> bn_beta(int k, int t) const {
    return {params_.data() + bn_beta_offset(k, t), spec_.bn_dim(k)};
  }

  Scalar& y0() { return params_[y0_offset_]; }
  Scalar y0() const { return params_[y0_offset_]; }
  Scalar& z0() { return params_[z0_offset_]; }
  Scalar z0() const { return params_[z0_offset_]; }

  /// Running statistics for normalized layer k; column t belongs to time index t.
  Matrix& running_mean(int k) { return running_mean_.at(k); }
  const Matrix& running_mean(int k) const { return running_mean_.at(k); }
  Matrix& running_var(int k) { return running_var_.at(k); }
  const Matrix& running_var(int k) const { return running_var_.at(k); }

 private:
  void check_time(int t) const {
    if (t < 0 || t >= spec_.n_time_steps) throw std::out_of_range("time index outside network's BN range");
  }

  NetworkSpec spec_;
  BatchNormConfig bn_;
  Vector params_;
  std::vector<Eigen::Index> weight_offsets_, bias_offsets_, bn_offsets_;
  Eigen::Index y0_offset_ = 0, z0_offset_ = 0;
  std::vector<Matrix> running_mean_, running_var_;
};

using Network = NetworkT<double>;

/// Glorot-uniform weights, zero biases, gamma = 1, beta = 0, fresh running
/// statistics. y0 and z0 are left to the caller.
template <typename Scalar>
void glorot_initialize(NetworkT<Scalar>& net, std::uint64_t seed) {
  const NetworkSpec& spec = net.spec();
  RandomStream rng(seed, 0x5eed);
  for (int l = 0; l < spec.dense_layers(); ++l) {
    const double limit = std::sqrt(6.0 / (spec.layer_inputs(l) + spec.layer_outputs(l)));
    auto w = net.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = Scalar(limit * (2.0 * rng.uniform() - 1.0));
    net.bias(l).setZero();
  }
  for (int k = 0; k < spec.bn_layers(); ++k) {
    for (int t = 0; t < spec.n_time_steps; ++t) {
      net.bn_gamma(k, t).setOnes();
      net.bn_beta(k, t).setZero();
    }
    net.running_mean(k).setZero();
    net.running_var(k).setOnes();
  }
}

// ---------------------------------------------------------------------------
// Forward / backward

template <typename Scalar>
struct ForwardCache {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  int time_index = 0;
  BnPhase phase = BnPhase::training;
  std::vector<Matrix> layer_inputs;     // input to dense layer l, after BN / Elu
  std::vector<Matrix> pre_activations;  // Elu argument of hidden layer l
  std::vector<BatchNormCache<Scalar>> bn;
  Matrix output;  // output_dim x batch
};

/// Evaluates the network column-wise on `inputs` (input_dim x batch) using
/// the normalization parameters of `time_index`. Does not touch running
/// statistics; see update_running_stats.
template <typename Scalar, typename Derived>
ForwardCache<Scalar> forward(const NetworkT<Scalar>& net, int time_index, const Eigen::MatrixBase<Derived>& inputs,
                             BnPhase phase = BnPhase::training) {
  using Matrix = typename NetworkT<Scalar>::Matrix;
  const NetworkSpec& spec = net.spec();
  if (inputs.rows() != spec.input_dim) throw std::invalid_argument("forward: input rows != input_dim");
  ForwardCache<Scalar> cache;
  cache.time_index = time_index;
  cache.phase = phase;
  cache.bn.resize(spec.bn_layers());
  const Scalar eps(net.bn_config().epsilon);

  auto normalize = [&](int k, const Matrix& x) -> Matrix {
    if (phase == BnPhase::training) {
      return batchnorm_forward_train(x, net.bn_gamma(k, time_index), net.bn_beta(k, time_index), eps, cache.bn[k]);
    }
    return batchnorm_forward_inference(x, net.bn_gamma(k, time_index), net.bn_beta(k, time_index),
                                       net.running_mean(k).col(time_index), net.running_var(k).col(time_index),
                                       eps, cache.bn[k]);
  };

  Matrix a = inputs;
  if (spec.bn_layers() > 0) a = normalize(0, a);
  for (int l = 0; l < spec.hidden_layers; ++l) {
    Matrix z = net.weight(l).lazyProduct(a);
    z.colwise() += net.bias(l);
    if (spec.bn_mode == BnMode::every_layer) z = normalize(l + 1, z);
    cache.layer_inputs.push_back(std::move(a));
    // max(z, 0) + (exp(min(z, 0)) - 1) is exactly elu(z) and vectorizes.
    a = (z.array().max(Scalar(0)) + (z.array().min(Scalar(0)).exp() - Scalar(1))).matrix();
    cache.pre_activations.push_back(std::move(z));
  }
  const int last = spec.hidden_layers;
  cache.output.noalias() = net.weight(last).lazyProduct(a);
  cache.output.colwise() += net.bias(last);
  cache.layer_inputs.push_back(std::move(a));
  return cache;
}

/// Reverse pass for one forward call. Accumulates (+=) parameter gradients
/// into `param_grad` (laid out like net.parameters()) and returns the
/// gradient with respect to the inputs.
template <typename Scalar, typename Derived>
typename NetworkT<Scalar>::Matrix backward(const NetworkT<Scalar>& net, const ForwardCache<Scalar>& cache,
                                           const Eigen::MatrixBase<Derived>& upstream,
                                           Eigen::Ref<typename NetworkT<Scalar>::Vector> param_grad) {
  using Matrix = typename NetworkT<Scalar>::Matrix;
  using Vector = typename NetworkT<Scalar>::Vector;
  const NetworkSpec& spec = net.spec();
  if (param_grad.size() != net.parameter_count()) throw std::invalid_argument("backward: gradient size mismatch");
  if (upstream.rows() != spec.output_dim || upstream.cols() != cache.output.cols()) {
    throw std::invalid_argument("backward: upstream shape mismatch");
  }
  const int t = cache.time_index;

  auto accumulate_dense = [&](int l, const Matrix& delta) {
    Eigen::Map<Matrix> gw(param_grad.data() + net.weight_offset(l), spec.layer_outputs(l), spec.layer_inputs(l));
    Eigen::Map<Vector> gb(param_grad.data() + net.bias_offset(l), spec.layer_outputs(l));
    gw.noalias() += delta * cache.layer_inputs[l].transpose();
    gb += delta.rowwise().sum();
  };
  auto normalize_back = [&](int k, const Matrix& dy) -> Matrix {
    BatchNormGrad<Scalar> g = batchnorm_backward(dy, cache.bn[k], net.bn_gamma(k, t));
    param_grad.segment(net.bn_gamma_offset(k, t), spec.bn_dim(k)) += g.gamma;
    param_grad.segment(net.bn_beta_offset(k, t), spec.bn_dim(k)) += g.beta;
    return std::move(g.input);
  };

  Matrix delta = upstream;
  const int last = spec.hidden_layers;
  accumulate_dense(last, delta);
  Matrix grad_a = net.weight(last).transpose().lazyProduct(delta);
  for (int l = last - 1; l >= 0; --l) {
    // Elu'(z) is 1 for z >= 0 and elu(z) + 1 otherwise.
    const Matrix& z = cache.pre_activations[l];
    const Matrix& act = cache.layer_inputs[l + 1];
    delta = (z.array() >= Scalar(0)).select(grad_a.array(), grad_a.array() * (act.array() + Scalar(1))).matrix();
    if (spec.bn_mode == BnMode::every_layer) delta = normalize_back(l + 1, delta);
    accumulate_dense(l, delta);
    grad_a = net.weight(l).transpose().lazyProduct(delta);
  }
  if (spec.bn_layers() > 0) grad_a = normalize_back(0, grad_a);
  return grad_a;
}

/// Folds the batch statistics of a training-phase forward call into the
/// running statistics: running = momentum * running + (1 - momentum) * batch.
template <typename Scalar>
void update_running_stats(NetworkT<Scalar>& net, const ForwardCache<Scalar>& cache) {
  if (cache.phase != BnPhase::training) return;
  const Scalar m(net.bn_config().momentum);
  for (int k = 0; k < net.spec().bn_layers(); ++k) {
    auto mean = net.running_mean(k).col(cache.time_index);
    auto var = net.running_var(k).col(cache.time_index);
    mean = m * mean + (Scalar(1) - m) * cache.bn[k].batch_mean;
    var = m * var + (Scalar(1) - m) * cache.bn[k].batch_var;
  }
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector first_moment;
  Vector second_moment;
  std::int64_t step = 0;
  AdamConfig config;
  Scalar learning_rate;

  AdamState(Eigen::Index n, Scalar lr, AdamConfig cfg = {})
      : first_moment(Vector::Zero(n)), second_moment(Vector::Zero(n)), config(cfg), learning_rate(lr) {}
};

/// One bias-corrected Adam update of `params` in place.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, Eigen::Ref<typename AdamState<Scalar>::Vector> params,
               const Eigen::Ref<const typename AdamState<Scalar>::Vector>& grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  const Scalar b1(state.config.beta1), b2(state.config.beta2), eps(state.config.epsilon);
  ++state.step;
  state.first_moment = b1 * state.first_moment + (Scalar(1) - b1) * grads;
  state.second_moment = b2 * state.second_moment + (Scalar(1) - b2) * grads.cwiseAbs2();
  const Scalar correction1 = Scalar(1) - Scalar(std::pow(state.config.beta1, double(state.step)));
  const Scalar correction2 = Scalar(1) - Scalar(std::pow(state.config.beta2, double(state.step)));
  params.array() -= state.learning_rate * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() + eps);
}

// ---------------------------------------------------------------------------
// Checkpoints (JSON): {"format", "version", "spec", "batch_norm",
// "parameters", "running_mean", "running_var"}.

std::string save_checkpoint(const Network& net);
Network load_checkpoint(std::string_view text);

}  // namespace deepbarrier
