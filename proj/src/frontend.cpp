#include "deepwifi/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "deepwifi/util.hpp"

namespace deepwifi::frontend {

using waveform::cplx;

void FrontEndConfig::validate() const {
  if (adc_bits < 2 || adc_bits % 2 != 0 || adc_bits > 32) throw std::invalid_argument("adc_bits must be even, 2..32");
  if (!(band_low < band_high) || band_low < -0.5 || band_high > 0.5)
    throw std::invalid_argument("band limits must satisfy -0.5 <= low < high <= 0.5");
  if (fir_taps < 3 || fir_taps % 2 == 0) throw std::invalid_argument("fir_taps must be odd and >= 3");
  if (!(full_scale > 0.0)) throw std::invalid_argument("full_scale must be positive");
}

int quantize_code(double x, int bits) {
  const int top = (1 << bits) - 1;
  const double pos = (std::clamp(x, -1.0, 1.0) + 1.0) * 0.5 * top;
  return std::clamp(static_cast<int>(std::lround(pos)), 0, top);
}

double code_value(int code, int bits) {
  const int top = (1 << bits) - 1;
  return -1.0 + 2.0 * code / top;
}

Samples digitize(const Samples& normalized, int bits_per_component) {
  Samples out(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    out[i] = cplx(code_value(quantize_code(normalized[i].real(), bits_per_component), bits_per_component),
                  code_value(quantize_code(normalized[i].imag(), bits_per_component), bits_per_component));
  }
  return out;
}

std::vector<cplx> design_bandpass(const FrontEndConfig& cfg) {
  cfg.validate();
  const int n = cfg.fir_taps;
  const int mid = n / 2;
  const double center = 0.5 * (cfg.band_low + cfg.band_high);
  const double half_width = 0.5 * (cfg.band_high - cfg.band_low);
  std::vector<cplx> h(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = i - mid;
    const double x = 2.0 * half_width * t;
    const double sinc = t == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double phase = 2.0 * std::numbers::pi * i / (n - 1);
    const double window = 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
    h[static_cast<std::size_t>(i)] =
        2.0 * half_width * sinc * window * std::polar(1.0, 2.0 * std::numbers::pi * center * t);
  }
  // unit gain at band center
  cplx dc(0.0, 0.0);
  for (int i = 0; i < n; ++i) dc += h[static_cast<std::size_t>(i)] * std::polar(1.0, -2.0 * std::numbers::pi * center * (i - mid));
  for (auto& v : h) v /= std::abs(dc);
  return h;
}

Samples bandpass(const Samples& x, const FrontEndConfig& cfg) {
  const auto h = design_bandpass(cfg);
  const long mid = static_cast<long>(h.size() / 2);
  const long n = static_cast<long>(x.size());
  Samples y(x.size(), cplx(0.0, 0.0));
  for (long i = 0; i < n; ++i) {
    cplx acc(0.0, 0.0);
    for (long k = 0; k < static_cast<long>(h.size()); ++k) {
      const long j = i + mid - k;
      if (j >= 0 && j < n) acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(j)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

Vector digitize_vector(const Samples& x, const FrontEndConfig& cfg) {
  const int bits = cfg.bits_per_component();
  Vector v(static_cast<Eigen::Index>(2 * x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    v[static_cast<Eigen::Index>(2 * i)] = code_value(quantize_code(x[i].real() / cfg.full_scale, bits), bits);
    v[static_cast<Eigen::Index>(2 * i + 1)] = code_value(quantize_code(x[i].imag() / cfg.full_scale, bits), bits);
  }
  return v;
}

Vector preprocess(const Samples& x, const FrontEndConfig& cfg) { return digitize_vector(bandpass(x, cfg), cfg); }

Matrix preprocess_frames(const std::vector<waveform::IqFrame>& frames, const std::vector<std::size_t>& idx,
                         const FrontEndConfig& cfg) {
  if (idx.empty()) return Matrix();
  const auto n = static_cast<Eigen::Index>(2 * frames.at(idx.front()).samples.size());
  Matrix out(n, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const auto& s = frames.at(idx[c]).samples;
    if (static_cast<Eigen::Index>(2 * s.size()) != n) throw std::invalid_argument("frames differ in length");
    out.col(static_cast<Eigen::Index>(c)) = preprocess(s, cfg);
  }
  return out;
}

Samples to_samples(const Vector& interleaved) {
  Samples s(static_cast<std::size_t>(interleaved.size() / 2));
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = cplx(interleaved[static_cast<Eigen::Index>(2 * i)], interleaved[static_cast<Eigen::Index>(2 * i + 1)]);
  return s;
}

nn::Network build_dae(std::size_t input_dim, const DaeConfig& cfg) {
  if (cfg.hidden.size() < 2) throw std::invalid_argument("autoencoder needs at least two hidden layers");
  std::vector<nn::LayerSpec> specs;
  std::size_t in = input_dim;
  for (std::size_t h : cfg.hidden) {
    specs.push_back({in, h, nn::Activation::tanh, 0.0});
    in = h;
  }
  specs.push_back({in, input_dim, nn::Activation::tanh, 0.0});
  return nn::Network(specs, cfg.seed);
}

DaeResult train_dae(const Matrix& train_x, const Matrix& test_x, const DaeConfig& cfg) {
  if (train_x.cols() == 0) throw std::invalid_argument("empty training set");
  if (!(cfg.noise_variance >= 0.0)) throw std::invalid_argument("noise_variance must be >= 0");
  if (cfg.batch == 0) throw std::invalid_argument("batch must be >= 1");
  DaeResult result;
  result.dae.net = build_dae(static_cast<std::size_t>(train_x.rows()), cfg);
  result.dae.encoder_layers = (cfg.hidden.size() + 1) / 2;
  if (result.dae.latent_dim() >= static_cast<std::size_t>(train_x.rows()))
    throw std::invalid_argument("latent dimension must be smaller than the input");
  auto& net = result.dae.net;
  nn::AdamState adam(net, cfg.lr);
  nn::Rng rng(cfg.seed ^ 0xdae0ULL);
  std::normal_distribution<double> noise(0.0, std::sqrt(cfg.noise_variance));

  auto eval = [&](const Matrix& x) {
    return x.cols() == 0 ? 0.0 : nn::batch_loss(nn::LossKind::mse, net.forward_batch(x), x);
  };
  result.history.push_back({0, eval(train_x), eval(test_x)});

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_x.cols()));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const auto bs = static_cast<Eigen::Index>(end - start);
      Matrix clean(train_x.rows(), bs);
      for (Eigen::Index c = 0; c < bs; ++c) clean.col(c) = train_x.col(order[start + static_cast<std::size_t>(c)]);
      Matrix noisy = clean;
      for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy.data()[i] += noise(rng);
      double batch_loss = 0.0;
      // target is the clean input, not the corrupted one
      const nn::Gradients g = nn::backward_batch(net, noisy, clean, nn::LossKind::mse, nullptr, &batch_loss);
      if (!std::isfinite(batch_loss)) throw nn::NumericError("autoencoder loss diverged");
      nn::adam_step(net, g, adam);
      loss_sum += batch_loss * static_cast<double>(bs);
    }
    result.history.push_back({epoch, loss_sum / static_cast<double>(order.size()), eval(test_x)});
  }
  return result;
}

Matrix encode(const Dae& dae, const Matrix& x) { return dae.net.forward_prefix(x, dae.encoder_layers); }

Vector encode(const Dae& dae, const Vector& x) { return encode(dae, Matrix(x)).col(0); }

Matrix reconstruct(const Dae& dae, const Matrix& x) { return dae.net.forward_batch(x); }

double relative_mse(const Matrix& x, const Matrix& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw std::invalid_argument("shape mismatch");
  const double denom = x.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("reference has zero energy");
  return (x - x_hat).squaredNorm() / denom;
}

double out_of_band_power(const Samples& x, const FrontEndConfig& cfg) {
  const Samples spec = waveform::fft(x);
  const double n = static_cast<double>(spec.size());
  double p = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    double f = static_cast<double>(k) / n;
    if (f >= 0.5) f -= 1.0;
    if (f < cfg.band_low || f > cfg.band_high) p += std::norm(spec[k]);
  }
  return p / (n * n);
}

double oob_suppression_db(const Dae& dae, const Matrix& clean, double noise_variance, std::uint64_t seed,
                          const FrontEndConfig& cfg) {
  if (clean.cols() == 0) throw std::invalid_argument("no frames");
  nn::Rng rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(noise_variance));
  Matrix noisy = clean;
  for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy.data()[i] += noise(rng);
  const Matrix recon = reconstruct(dae, noisy);
  double before = 0.0, after = 0.0;
  for (Eigen::Index c = 0; c < clean.cols(); ++c) {
    before += out_of_band_power(to_samples(noisy.col(c)), cfg);
    after += out_of_band_power(to_samples(recon.col(c)), cfg);
  }
  return linear_to_db(before / after);
}

Standardizer Standardizer::fit(const Matrix& x) {
  if (x.cols() == 0) throw std::invalid_argument("cannot fit standardizer on empty data");
  Standardizer s;
  s.mean = x.rowwise().mean();
  const Matrix centered = x.colwise() - s.mean;
  s.scale = (centered.array().square().rowwise().sum() / static_cast<double>(x.cols())).sqrt().matrix();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i)
    if (s.scale[i] < 1e-12) s.scale[i] = 1.0;
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  return ((x.colwise() - mean).array().colwise() / scale.array()).matrix();
}

Vector Standardizer::apply(const Vector& x) const { return ((x - mean).array() / scale.array()).matrix(); }

void save_history_csv(const std::vector<LossRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# deepwifi-csv dae_loss v1\n";
  out << "epoch,train_loss,test_loss\n";
  out.precision(10);
  for (const auto& r : history) out << r.epoch << ',' << r.train_loss << ',' << r.test_loss << '\n';
}

Matrix PcaResult::project(const Matrix& x) const { return (x.rowwise() - mean.transpose()) * components; }

PcaResult pca_fit(const Matrix& data, std::size_t k, std::uint64_t seed, std::size_t max_iter, double tol) {
  const auto n = data.rows();
  const auto d = data.cols();
  if (n < 2) throw std::invalid_argument("pca needs at least two samples");
  if (k > static_cast<std::size_t>(d)) throw std::invalid_argument("k exceeds data dimension");
  PcaResult r;
  r.mean = data.colwise().mean().transpose();
  const Matrix xc = data.rowwise() - r.mean.transpose();
  r.total_variance = xc.squaredNorm() / static_cast<double>(n);
  std::vector<Vector> comps;
  std::vector<double> eig;
  nn::Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto deflate = [&](Vector& v) {
    for (const auto& c : comps) v -= c.dot(v) * c;
  };
  for (std::size_t c = 0; c < k; ++c) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = g(rng);
    deflate(v);
    v.normalize();
    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
      Vector w = xc.transpose() * (xc * v) / static_cast<double>(n);
      deflate(w);
      lambda = v.dot(w);
      const double norm = w.norm();
      if (norm == 0.0) break;
      Vector next = w / norm;
      const double change = 1.0 - std::abs(next.dot(v));
      v = next;
      if (change < tol) break;
    }
    if (!(lambda > 1e-12 * r.total_variance)) {
      r.truncated = true;
      break;
    }
    deflate(v);
    v.normalize();
    comps.push_back(v);
    eig.push_back(lambda);
  }
  r.components.resize(d, static_cast<Eigen::Index>(comps.size()));
  r.eigenvalues.resize(static_cast<Eigen::Index>(eig.size()));
  for (std::size_t c = 0; c < comps.size(); ++c) {
    r.components.col(static_cast<Eigen::Index>(c)) = comps[c];
    r.eigenvalues[static_cast<Eigen::Index>(c)] = eig[c];
  }
  return r;
}

}  // namespace deepwifi::frontend
