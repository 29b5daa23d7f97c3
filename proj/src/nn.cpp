#include "deepwifi/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace deepwifi::nn {

namespace {

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

Matrix softmax_columns(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double shift = z.col(c).maxCoeff();
    out.col(c) = (z.col(c).array() - shift).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

// dL/dz from dL/dh for one activation, column batch.
Matrix activation_backward(Activation a, const Matrix& z, const Matrix& h, const Matrix& grad_h) {
  switch (a) {
    case Activation::linear:
      return grad_h;
    case Activation::tanh:
      return (grad_h.array() * (1.0 - h.array().square())).matrix();
    case Activation::relu:
      return (grad_h.array() * (z.array() > 0.0).cast<double>()).matrix();
    case Activation::softmax: {
      Matrix out(h.rows(), h.cols());
      for (Eigen::Index c = 0; c < h.cols(); ++c) {
        const double dot = h.col(c).dot(grad_h.col(c));
        out.col(c) = (h.col(c).array() * (grad_h.col(c).array() - dot)).matrix();
      }
      return out;
    }
  }
  throw std::logic_error("unknown activation");
}

Matrix loss_gradient(LossKind kind, const Matrix& y, const Matrix& target) {
  if (kind == LossKind::mse) return 2.0 * (y - target);
  Matrix g = Matrix::Zero(y.rows(), y.cols());
  for (Eigen::Index c = 0; c < y.cols(); ++c)
    for (Eigen::Index r = 0; r < y.rows(); ++r)
      if (target(r, c) != 0.0 && y(r, c) >= kProbabilityFloor) g(r, c) = -target(r, c) / y(r, c);
  return g;
}

void validate_one_hot(const Vector& target) {
  int ones = 0;
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    if (target[i] == 1.0) {
      ++ones;
    } else if (target[i] != 0.0) {
      throw std::invalid_argument("cross-entropy target must be one-hot");
    }
  }
  if (ones != 1) throw std::invalid_argument("cross-entropy target must be one-hot");
}

struct Trace {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> z;
  std::vector<Matrix> h;
  std::vector<Matrix> masks;  // empty when no dropout
  Matrix output;
};

Trace run_forward(const Network& net, const Matrix& x, Rng* rng) {
  if (static_cast<std::size_t>(x.rows()) != net.input_dim())
    throw std::invalid_argument("input dimension mismatch");
  Trace tr;
  Matrix a = x;
  for (const auto& layer : net.layers()) {
    tr.inputs.push_back(a);
    Matrix z = layer.weights * a;
    z.colwise() += layer.bias;
    Matrix h = activate(layer.spec.activation, z);
    Matrix mask;
    a = h;
    if (rng != nullptr && layer.spec.dropout_prob > 0.0) {
      const double keep = 1.0 - layer.spec.dropout_prob;
      std::bernoulli_distribution keep_draw(keep);
      mask.resize(h.rows(), h.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i)
        mask.data()[i] = keep > 0.0 && keep_draw(*rng) ? 1.0 / keep : 0.0;
      a = (h.array() * mask.array()).matrix();
    }
    check_finite(a, "activations");
    tr.z.push_back(std::move(z));
    tr.h.push_back(std::move(h));
    tr.masks.push_back(std::move(mask));
  }
  tr.output = a;
  return tr;
}

}  // namespace

Network::Network(std::vector<LayerSpec> specs, std::uint64_t seed) : seed_(seed) {
  if (specs.empty()) throw std::invalid_argument("network needs at least one layer");
  Rng rng(seed);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.input_dim < 1 || s.output_dim < 1) throw std::invalid_argument("layer dims must be >= 1");
    if (!(s.dropout_prob >= 0.0 && s.dropout_prob <= 1.0))
      throw std::invalid_argument("dropout_prob must lie in [0,1]");
    if (i > 0 && specs[i - 1].output_dim != s.input_dim)
      throw std::invalid_argument("adjacent layer dimensions do not match");
    DenseLayer layer;
    layer.spec = s;
    const double limit = std::sqrt(6.0 / static_cast<double>(s.input_dim + s.output_dim));
    std::uniform_real_distribution<double> init(-limit, limit);
    layer.weights.resize(static_cast<Eigen::Index>(s.output_dim), static_cast<Eigen::Index>(s.input_dim));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = init(rng);
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(s.output_dim));
    layers_.push_back(std::move(layer));
  }
}

std::size_t Network::input_dim() const { return layers_.empty() ? 0 : layers_.front().spec.input_dim; }
std::size_t Network::output_dim() const { return layers_.empty() ? 0 : layers_.back().spec.output_dim; }

std::size_t Network::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Vector Network::forward(const Vector& x, bool train_mode, Rng* rng) const {
  if (train_mode && rng == nullptr) throw std::invalid_argument("train-mode forward needs an rng");
  return run_forward(*this, x, train_mode ? rng : nullptr).output.col(0);
}

Matrix Network::forward_batch(const Matrix& x) const { return run_forward(*this, x, nullptr).output; }

Matrix Network::forward_prefix(const Matrix& x, std::size_t count) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim()) throw std::invalid_argument("input dimension mismatch");
  if (count > layers_.size()) throw std::invalid_argument("prefix longer than network");
  Matrix a = x;
  for (std::size_t i = 0; i < count; ++i) {
    Matrix z = layers_[i].weights * a;
    z.colwise() += layers_[i].bias;
    a = activate(layers_[i].spec.activation, z);
  }
  check_finite(a, "activations");
  return a;
}

Gradients Network::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

Vector activate(Activation a, const Vector& z) { return activate(a, Matrix(z)).col(0); }

Matrix activate(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::linear:
      return z;
    case Activation::tanh:
      return z.array().tanh().matrix();
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::softmax:
      return softmax_columns(z);
  }
  throw std::logic_error("unknown activation");
}

double loss(LossKind kind, const Vector& prediction, const Vector& target) {
  if (prediction.size() != target.size()) throw std::invalid_argument("loss: length mismatch");
  if (kind == LossKind::mse) return (prediction - target).squaredNorm();
  validate_one_hot(target);
  double l = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i)
    if (target[i] != 0.0) l -= target[i] * std::log(std::max(prediction[i], kProbabilityFloor));
  return l;
}

double batch_loss(LossKind kind, const Matrix& prediction, const Matrix& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw std::invalid_argument("batch_loss: shape mismatch");
  if (prediction.cols() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index c = 0; c < prediction.cols(); ++c)
    total += loss(kind, prediction.col(c), target.col(c));
  return total / static_cast<double>(prediction.cols());
}

Gradients backward_batch(const Network& net, const Matrix& x, const Matrix& target, LossKind kind,
                         Rng* rng, double* loss_out) {
  if (static_cast<std::size_t>(target.rows()) != net.output_dim() || target.cols() != x.cols())
    throw std::invalid_argument("target shape mismatch");
  const Trace tr = run_forward(net, x, rng);
  if (loss_out != nullptr) *loss_out = batch_loss(kind, tr.output, target);

  const double inv_batch = 1.0 / static_cast<double>(x.cols());
  Gradients grads = net.zero_gradients();
  Matrix grad_a = loss_gradient(kind, tr.output, target);
  for (std::size_t li = net.num_layers(); li-- > 0;) {
    const auto& layer = net.layer(li);
    Matrix grad_h = tr.masks[li].size() > 0 ? Matrix(grad_a.array() * tr.masks[li].array()) : grad_a;
    Matrix grad_z = activation_backward(layer.spec.activation, tr.z[li], tr.h[li], grad_h);
    grads.weights[li].noalias() = grad_z * tr.inputs[li].transpose() * inv_batch;
    grads.bias[li] = grad_z.rowwise().sum() * inv_batch;
    if (li > 0) grad_a = layer.weights.transpose() * grad_z;
  }
  for (std::size_t li = 0; li < grads.weights.size(); ++li) {
    check_finite(grads.weights[li], "gradients");
    check_finite(grads.bias[li], "gradients");
  }
  return grads;
}

Gradients backward(const Network& net, const Vector& x, const Vector& target, LossKind kind) {
  return backward_batch(net, Matrix(x), Matrix(target), kind, nullptr, nullptr);
}

AdamState::AdamState(const Network& net, double learning_rate)
    : lr(learning_rate), m(net.zero_gradients()), v(net.zero_gradients()) {}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  if (grads.weights.size() != net.num_layers() || state.m.weights.size() != net.num_layers())
    throw std::invalid_argument("adam_step: shape mismatch");
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    if (param.size() != g.size() || m.size() != g.size()) throw std::invalid_argument("adam_step: shape mismatch");
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= state.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.epsilon);
  };
  for (std::size_t li = 0; li < net.num_layers(); ++li) {
    auto& layer = net.layer(li);
    update(layer.weights, grads.weights[li], state.m.weights[li], state.v.weights[li]);
    update(layer.bias, grads.bias[li], state.m.bias[li], state.v.bias[li]);
  }
}

double gradient_check(const Network& net, const Vector& x, const Vector& target, LossKind kind, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const Gradients analytic = backward(net, x, target, kind);
  Network probe = net;
  double worst = 0.0;
  auto compare = [&](double& param, double grad) {
    const double saved = param;
    param = saved + eps;
    const double up = loss(kind, probe.forward(x), target);
    param = saved - eps;
    const double down = loss(kind, probe.forward(x), target);
    param = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(grad), std::abs(numeric), 1e-12});
    // Both tiny: absolute agreement is what matters.
    const double err = std::abs(grad - numeric) < 1e-10 ? 0.0 : std::abs(grad - numeric) / denom;
    worst = std::max(worst, err);
  };
  for (std::size_t li = 0; li < probe.num_layers(); ++li) {
    auto& layer = probe.layer(li);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
      compare(layer.weights.data()[i], analytic.weights[li].data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) compare(layer.bias[i], analytic.bias[li][i]);
  }
  return worst;
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
    case Activation::linear: return "linear";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "softmax") return Activation::softmax;
  if (s == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation: " + s);
}

void save(const Network& net, std::ostream& out) {
  out << "deepwifi-nn 1\n";
  out << "seed " << net.seed() << "\n";
  out << "layers " << net.num_layers() << "\n";
  for (const auto& l : net.layers())
    out << l.spec.input_dim << ' ' << l.spec.output_dim << ' ' << to_string(l.spec.activation) << ' '
        << std::setprecision(17) << l.spec.dropout_prob << "\n";
  out << std::setprecision(17);
  for (const auto& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out << (c ? " " : "") << l.weights(r, c);
      out << "\n";
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) out << (i ? " " : "") << l.bias[i];
    out << "\n";
  }
}

Network load(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "deepwifi-nn" || version != 1) throw std::runtime_error("not a deepwifi-nn v1 model");
  std::string key;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  in >> key >> seed;
  if (key != "seed") throw std::runtime_error("malformed model header");
  in >> key >> count;
  if (key != "layers" || count == 0) throw std::runtime_error("malformed model header");
  std::vector<LayerSpec> specs(count);
  for (auto& s : specs) {
    std::string act;
    in >> s.input_dim >> s.output_dim >> act >> s.dropout_prob;
    s.activation = activation_from_string(act);
  }
  if (!in) throw std::runtime_error("truncated model header");
  Network net(specs, seed);
  for (std::size_t li = 0; li < count; ++li) {
    auto& l = net.layer(li);
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) in >> l.weights(r, c);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) in >> l.bias[i];
  }
  if (!in) throw std::runtime_error("truncated model parameters");
  return net;
}

void save_file(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save(net, out);
}

Network load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return load(in);
}

}  // namespace deepwifi::nn
