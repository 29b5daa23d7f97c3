#pragma once

// RF front end: band-pass FIR, 8+8 bit ADC, denoising autoencoder features,
// and a PCA baseline.

#include <cstdint>
#include <string>
#include <vector>

#include "deepwifi/nn.hpp"
#include "deepwifi/waveform.hpp"

namespace deepwifi::frontend {

using nn::Matrix;
using nn::Vector;
using waveform::Samples;

struct FrontEndConfig {
  int adc_bits = 16;  // split evenly between I and Q
  double band_low = -0.25;  // normalized frequency, cycles/sample
  double band_high = 0.25;
  double sample_rate = waveform::kSampleRate;
  int fir_taps = 63;
  double full_scale = 2.1213203435596424;  // 3 sigma per component at unit complex power

  int bits_per_component() const { return adc_bits / 2; }
  void validate() const;
};

/// ADC code for a normalized component; out-of-range input saturates.
int quantize_code(double x, int bits);
double code_value(int code, int bits);
/// Quantizes each component of already normalized samples.
Samples digitize(const Samples& normalized, int bits_per_component = 8);

/// Linear-phase windowed-sinc (Blackman) complex band-pass taps.
std::vector<waveform::cplx> design_bandpass(const FrontEndConfig& cfg);
/// Zero-phase filtering (group delay removed), same length as the input.
Samples bandpass(const Samples& x, const FrontEndConfig& cfg);

/// bandpass -> scale by 1/full_scale -> digitize -> interleaved I/Q vector.
Vector preprocess(const Samples& x, const FrontEndConfig& cfg);
/// Same without the band-pass stage.
Vector digitize_vector(const Samples& x, const FrontEndConfig& cfg);
/// Column per frame.
Matrix preprocess_frames(const std::vector<waveform::IqFrame>& frames, const std::vector<std::size_t>& idx,
                         const FrontEndConfig& cfg);

Samples to_samples(const Vector& interleaved);

struct DaeConfig {
  std::vector<std::size_t> hidden = {256, 64, 256};
  double noise_variance = 0.1;
  std::size_t batch = 64;
  std::size_t epochs = 20;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct Dae {
  nn::Network net;
  std::size_t encoder_layers = 2;

  std::size_t latent_dim() const { return net.layer(encoder_layers - 1).spec.output_dim; }
};

struct LossRecord {
  std::size_t epoch;
  double train_loss;
  double test_loss;
};

struct DaeResult {
  Dae dae;
  std::vector<LossRecord> history;
};

nn::Network build_dae(std::size_t input_dim, const DaeConfig& cfg);

/// Trains on columns of train_x with Gaussian input corruption; losses are
/// clean-input reconstruction MSE per sample.
DaeResult train_dae(const Matrix& train_x, const Matrix& test_x, const DaeConfig& cfg);

/// Encoder output, no noise injection.
Matrix encode(const Dae& dae, const Matrix& x);
Vector encode(const Dae& dae, const Vector& x);
Matrix reconstruct(const Dae& dae, const Matrix& x);

/// E||X - Xhat||^2 / E||X||^2 over the columns.
double relative_mse(const Matrix& x, const Matrix& x_hat);

/// Out-of-band power of a signal: energy outside the configured band.
double out_of_band_power(const Samples& x, const FrontEndConfig& cfg);

/// Corrupts each column with the training noise and compares out-of-band
/// power before and after reconstruction, in dB (positive = suppressed).
double oob_suppression_db(const Dae& dae, const Matrix& clean, double noise_variance, std::uint64_t seed,
                          const FrontEndConfig& cfg);

/// Per-dimension z-score fitted on a training matrix (columns = samples).
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
  Vector apply(const Vector& x) const;
};

void save_history_csv(const std::vector<LossRecord>& history, const std::string& path);

struct PcaResult {
  Vector mean;
  Matrix components;  // dim x k, unit-norm columns
  Vector eigenvalues;
  double total_variance = 0.0;
  bool truncated = false;  // fewer than k components: data rank too low

  Vector explained_ratio() const { return eigenvalues / total_variance; }
  Matrix project(const Matrix& x) const;  // rows = samples -> rows x k
};

/// Top-k principal directions of the rows of `data` by power iteration on the
/// sample covariance with deflation.
PcaResult pca_fit(const Matrix& data, std::size_t k, std::uint64_t seed = 7, std::size_t max_iter = 2000,
                  double tol = 1e-12);

}  // namespace deepwifi::frontend
