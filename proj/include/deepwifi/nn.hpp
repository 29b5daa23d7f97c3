#pragma once

// Dense multilayer perceptrons with backprop and ADAM, shared by the
// denoising autoencoder and the signal classifier.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace deepwifi::nn {

using Rng = std::mt19937_64;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { tanh, relu, softmax, linear };
enum class LossKind { mse, cross_entropy };

/// Probability floor applied inside the cross-entropy logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

/// Raised when an activation, loss or gradient becomes NaN/Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LayerSpec {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  Activation activation = Activation::linear;
  double dropout_prob = 0.0;  // applied to this layer's output in train mode
};

struct DenseLayer {
  LayerSpec spec;
  Matrix weights;  // output_dim x input_dim
  Vector bias;
};

/// Per-layer parameter gradients; shapes mirror the network's parameters.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
};

class Network {
 public:
  Network() = default;
  /// Validates the layer chain and draws Glorot-uniform weights, zero biases.
  Network(std::vector<LayerSpec> specs, std::uint64_t seed);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_parameters() const;

  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  DenseLayer& layer(std::size_t i) { return layers_.at(i); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::uint64_t seed() const { return seed_; }

  /// Single-sample forward pass. Dropout is applied only when train_mode.
  Vector forward(const Vector& x, bool train_mode = false, Rng* rng = nullptr) const;

  /// Column-per-sample batch forward pass (inference, no dropout).
  Matrix forward_batch(const Matrix& x) const;

  /// Runs the first `count` layers; used to read out encoder activations.
  Matrix forward_prefix(const Matrix& x, std::size_t count) const;

  /// Zero-filled gradient container matching this network.
  Gradients zero_gradients() const;

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t seed_ = 0;
};

Vector activate(Activation a, const Vector& z);
Matrix activate(Activation a, const Matrix& z);

/// Per-sample loss. MSE is the squared Euclidean norm of the residual;
/// cross-entropy expects a one-hot target and uses natural log.
double loss(LossKind kind, const Vector& prediction, const Vector& target);

/// Mean per-sample loss over the columns of a batch.
double batch_loss(LossKind kind, const Matrix& prediction, const Matrix& target);

/// Analytic gradient of loss(forward(x), target) with dropout disabled.
Gradients backward(const Network& net, const Vector& x, const Vector& target, LossKind kind);

/// Mean gradient over a column batch. When rng is given, dropout masks are
/// sampled (train mode); the batch loss is written to *loss_out if non-null.
Gradients backward_batch(const Network& net, const Matrix& x, const Matrix& target,
                         LossKind kind, Rng* rng = nullptr, double* loss_out = nullptr);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t t = 0;
  Gradients m;
  Gradients v;

  AdamState() = default;
  AdamState(const Network& net, double learning_rate);
};

/// One bias-corrected ADAM update; increments state.t before updating.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

/// Max relative error between backward() and central finite differences:
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
double gradient_check(const Network& net, const Vector& x, const Vector& target, LossKind kind,
                      double eps = 1e-5);

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Text serialization; see docs/formats.md ("deepwifi-nn 1").
void save(const Network& net, std::ostream& out);
Network load(std::istream& in);
void save_file(const Network& net, const std::string& path);
Network load_file(const std::string& path);

}  // namespace deepwifi::nn
