#pragma once

// RF fingerprinting: hardware impairment injection, five-feature signature
// extraction, MCD outlier authentication and per-user identification.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepwifi/nn.hpp"
#include "deepwifi/waveform.hpp"

namespace deepwifi::authfp {

using nn::Matrix;
using nn::Vector;
using waveform::Samples;

inline constexpr int kSignatureDim = 5;

struct ImpairmentProfile {
  int user_id = 0;
  double p = 1e4;  // interpolation factor
  double q = 1e4;  // decimation factor
  double cfo_hz = 0.0;
  double psi_db = 0.0;
  double phi_deg = 0.0;

  double kappa_i() const;
  double kappa_q() const;
  /// (1 - p/q) * 1e6
  double sro_ppm() const;
  void validate() const;

  /// User j: q = p - j, psi = j dB, phi = 10 j degrees, cfo = j * cfo_step_hz.
  static ImpairmentProfile for_user(int j, double cfo_step_hz = 5e3);
  static ImpairmentProfile identity();
};

/// Linear-interpolation resampling by p/q, truncated or zero-padded to the
/// input length.
Samples resample(const Samples& x, double p, double q);

/// Resample, carrier offset rotation, then I/Q imbalance:
/// rx = Re(tx) k_I e^{-i phi/2} + Im(tx) k_Q e^{i(pi/2 + phi/2)}.
Samples apply_impairments(const Samples& x, const ImpairmentProfile& profile,
                          double sample_rate = waveform::kSampleRate);

struct Signature {
  double coarse_cfo_hz = 0.0;
  double fine_cfo_hz = 0.0;
  double timing_offset = 0.0;  // samples
  double psi_db = 0.0;
  double phi_deg = 0.0;

  Vector to_vector() const;
  double cfo_hz() const { return coarse_cfo_hz + fine_cfo_hz; }
};

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expects the preamble at sample 0 (the search window allows a few samples
/// of slip). Fine CFO averages the cyclic prefix of the long training field
/// and of every data symbol; the imbalance terms come from second moments of
/// the whole frame minus the out-of-band noise estimate. Throws
/// ExtractionError when the long training field correlation is below the
/// detection floor.
Signature extract_signature(const Samples& rx, const waveform::OfdmGrid& grid = {},
                            double sample_rate = waveform::kSampleRate);

/// Noise power estimate from FFT bins with |f| > 0.3 cycles/sample.
double noise_power_estimate(const Samples& rx);

struct GaussianModel {
  Vector mean;
  Matrix cov;
  Matrix cov_inv;
  bool regularized = false;
};

GaussianModel fit_gaussian(const Matrix& rows);
double mahalanobis(const GaussianModel& m, const Vector& x);

struct McdModel : GaussianModel {
  std::size_t h = 0;
  std::vector<std::size_t> support;  // final (reweighted) subset
  std::vector<std::size_t> raw_support;  // minimum-determinant h-subset
  double raw_det = 0.0;
  double consistency = 1.0;
};

struct McdOptions {
  double h_fraction = 0.0;  // 0 -> ceil((n + d + 1) / 2)
  std::size_t restarts = 50;
  std::size_t max_csteps = 20;
  bool reweight = true;
};

/// FAST-MCD: random (d+1)-subsets, concentration steps, minimum determinant,
/// consistency rescaling by median MD^2 / chi2_{d,0.5}, then reweighting at
/// chi2_{d,0.975}.
McdModel mcd_fit(const Matrix& rows, std::uint64_t seed, const McdOptions& opts = {});

/// Recomputes the estimate on another data matrix using a fitted model's
/// subsets; used for equivariance checks.
McdModel mcd_refit(const Matrix& rows, const McdModel& fitted);

enum class AuthDecision { A, O };

AuthDecision authenticate(const Vector& sig, const GaussianModel& model, double threshold);

/// sqrt(chi2_{d}(q)), the classical distance cutoff.
double chi2_threshold(int dim, double q = 0.975);
/// q-quantile of the model's distances over the given rows.
double quantile_threshold(const GaussianModel& model, const Matrix& rows, double q);

struct UserModel {
  int user_id;
  GaussianModel model;
};

/// argmin over users of the Mahalanobis distance.
int identify(const Vector& sig, const std::vector<UserModel>& models);

enum class ThresholdRule { chi2, train_quantile };

struct AuthScenarioConfig {
  int n_users = 10;
  int n_authorized = 6;
  std::vector<double> snrs_db = {5, 10, 15, 20, 25};
  int per_user_snr = 50;
  double train_fraction = 0.5;
  double cfo_step_hz = 5e3;
  std::size_t n_samples = waveform::kDefaultFrameLength;
  ThresholdRule rule = ThresholdRule::chi2;
  double quantile = 0.9;
  double chi2_q = 0.975;
  double identify_min_snr_db = 15.0;
};

struct SignatureRecord {
  int user_id;
  double snr_db;
  Signature sig;
};

std::vector<SignatureRecord> make_signature_dataset(const AuthScenarioConfig& cfg, std::uint64_t seed);
void save_signatures_csv(const std::vector<SignatureRecord>& recs, const std::string& path);

struct AuthReport {
  // rows = true (A, O), cols = predicted (A, O); normalized to sum 1
  double confusion[2][2] = {{0, 0}, {0, 0}};
  double accuracy = 0.0;
  double outlier_false_accept = 0.0;  // O -> A among outliers
  double authorized_false_reject = 0.0;
  double identification_accuracy = 0.0;
  double threshold = 0.0;
  std::size_t n_test = 0;
  bool regularized = false;
};

AuthReport evaluate_auth(const std::vector<SignatureRecord>& recs, const AuthScenarioConfig& cfg, std::uint64_t seed);
void save_auth_csv(const AuthReport& rep, const std::string& path);
/// One row of scalar results.
void save_auth_metrics_csv(const AuthReport& rep, const std::string& path);

}  // namespace deepwifi::authfp
