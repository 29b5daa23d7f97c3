#include "deepwifi/authfp.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "deepwifi/util.hpp"

namespace deepwifi::authfp {

using waveform::cplx;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kLtfStart = waveform::kStsLength + waveform::kLtfCp;
constexpr int kTimingSearch = 8;
constexpr double kDetectionFloor = 0.35;
constexpr double kOutOfBand = 0.3;

double phase_to_hz(double phase, std::size_t lag, double fs) {
  return phase * fs / (2.0 * kPi * static_cast<double>(lag));
}

Samples derotate(const Samples& x, double cfo_hz, double fs) {
  Samples y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n)
    y[n] = x[n] * std::polar(1.0, -2.0 * kPi * cfo_hz * static_cast<double>(n) / fs);
  return y;
}

// Sample covariance (n - 1) of selected rows.
void moments(const Matrix& rows, const std::vector<std::size_t>& idx, Vector& mean, Matrix& cov) {
  const auto d = rows.cols();
  mean = Vector::Zero(d);
  for (auto i : idx) mean += rows.row(static_cast<Eigen::Index>(i)).transpose();
  mean /= static_cast<double>(idx.size());
  cov = Matrix::Zero(d, d);
  for (auto i : idx) {
    const Vector c = rows.row(static_cast<Eigen::Index>(i)).transpose() - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(std::max<std::size_t>(idx.size(), 2) - 1);
}

// Inverts cov, adding a ridge if it is numerically singular. Returns the log
// determinant of the (possibly regularized) matrix.
double invert(GaussianModel& m) {
  const auto d = m.cov.rows();
  const double scale = std::max(m.cov.trace() / static_cast<double>(d), 1e-300);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.cov);
  if (es.info() != Eigen::Success) throw std::invalid_argument("covariance decomposition failed");
  if (es.eigenvalues().minCoeff() <= 1e-12 * scale) {
    m.cov += Matrix::Identity(d, d) * (1e-9 * scale);
    m.regularized = true;
    es.compute(m.cov);
  }
  const Vector inv_ev = es.eigenvalues().cwiseInverse();
  m.cov_inv = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
  return es.eigenvalues().array().log().sum();
}

GaussianModel gaussian_on(const Matrix& rows, const std::vector<std::size_t>& idx, double* logdet = nullptr) {
  GaussianModel m;
  moments(rows, idx, m.mean, m.cov);
  const double ld = invert(m);
  if (logdet) *logdet = ld;
  return m;
}

std::vector<double> sq_distances(const GaussianModel& m, const Matrix& rows) {
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Vector c = rows.row(i).transpose() - m.mean;
    out[static_cast<std::size_t>(i)] = c.dot(m.cov_inv * c);
  }
  return out;
}

std::vector<std::size_t> smallest(const std::vector<double>& v, std::size_t h) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  idx.resize(h);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
}

double chi2_quantile(int dim, double q) {
  return boost::math::quantile(boost::math::chi_squared(static_cast<double>(dim)), q);
}

// Consistency rescaling and optional reweighting, shared by fit and refit.
void finish(McdModel& m, const Matrix& rows, bool reweight) {
  const int d = static_cast<int>(rows.cols());
  m.consistency = median(sq_distances(m, rows)) / chi2_quantile(d, 0.5);
  if (!(m.consistency > 0.0)) m.consistency = 1.0;
  m.cov *= m.consistency;
  m.cov_inv /= m.consistency;
  if (!reweight) {
    m.support = m.raw_support;
    return;
  }
  const auto d2 = sq_distances(m, rows);
  const double cut = chi2_quantile(d, 0.975);
  m.support.clear();
  for (std::size_t i = 0; i < d2.size(); ++i)
    if (d2[i] <= cut) m.support.push_back(i);
  if (m.support.size() <= static_cast<std::size_t>(d)) {
    m.support = m.raw_support;
    return;
  }
  const bool reg = m.regularized;
  static_cast<GaussianModel&>(m) = gaussian_on(rows, m.support);
  m.regularized = m.regularized || reg;
  const double c2 = median(sq_distances(m, rows)) / chi2_quantile(d, 0.5);
  if (c2 > 0.0) {
    m.cov *= c2;
    m.cov_inv /= c2;
  }
}

}  // namespace

double ImpairmentProfile::kappa_i() const { return std::pow(10.0, psi_db / 40.0); }
double ImpairmentProfile::kappa_q() const { return std::pow(10.0, -psi_db / 40.0); }
double ImpairmentProfile::sro_ppm() const { return (1.0 - p / q) * 1e6; }

void ImpairmentProfile::validate() const {
  if (!(p > 0.0) || !(q > 0.0)) throw std::invalid_argument("resampling factors must be positive");
  if (!std::isfinite(cfo_hz) || !std::isfinite(psi_db) || !std::isfinite(phi_deg))
    throw std::invalid_argument("impairment values must be finite");
}

ImpairmentProfile ImpairmentProfile::for_user(int j, double cfo_step_hz) {
  if (j < 1) throw std::invalid_argument("user id must be >= 1");
  ImpairmentProfile pr;
  pr.user_id = j;
  pr.p = 1e4;
  pr.q = pr.p - j;
  pr.cfo_hz = cfo_step_hz * j;
  pr.psi_db = j;
  pr.phi_deg = 10.0 * j;
  return pr;
}

ImpairmentProfile ImpairmentProfile::identity() { return ImpairmentProfile{}; }

Samples resample(const Samples& x, double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw std::invalid_argument("resampling factors must be positive");
  if (p == q) return x;
  const std::size_t n = x.size();
  Samples y(n, cplx(0.0, 0.0));
  const double step = q / p;
  for (std::size_t m = 0; m < n; ++m) {
    const double t = static_cast<double>(m) * step;
    const auto i = static_cast<std::size_t>(std::floor(t));
    const double f = t - static_cast<double>(i);
    if (i + 1 < n)
      y[m] = (1.0 - f) * x[i] + f * x[i + 1];
    else if (i + 1 == n && f == 0.0)
      y[m] = x[i];
  }
  return y;
}

Samples apply_impairments(const Samples& x, const ImpairmentProfile& pr, double fs) {
  pr.validate();
  Samples y = resample(x, pr.p, pr.q);
  const double half_phi = pr.phi_deg * kPi / 360.0;
  const cplx a = pr.kappa_i() * std::polar(1.0, -half_phi);
  const cplx b = pr.kappa_q() * std::polar(1.0, kPi / 2.0 + half_phi);
  for (std::size_t n = 0; n < y.size(); ++n) {
    const cplx r = pr.cfo_hz == 0.0 ? y[n] : y[n] * std::polar(1.0, 2.0 * kPi * pr.cfo_hz * static_cast<double>(n) / fs);
    y[n] = r.real() * a + r.imag() * b;
  }
  return y;
}

Vector Signature::to_vector() const {
  Vector v(kSignatureDim);
  v << coarse_cfo_hz, fine_cfo_hz, timing_offset, psi_db, phi_deg;
  return v;
}

double noise_power_estimate(const Samples& rx) {
  const Samples f = waveform::fft(rx);
  const std::size_t n = f.size();
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double freq = static_cast<double>(k) / static_cast<double>(n);
    if (freq >= 0.5) freq -= 1.0;
    if (std::abs(freq) > kOutOfBand) {
      acc += std::norm(f[k]);
      ++count;
    }
  }
  return count ? acc / static_cast<double>(count) / static_cast<double>(n) : 0.0;
}

Signature extract_signature(const Samples& rx, const waveform::OfdmGrid& grid, double fs) {
  if (rx.size() < waveform::kPreambleLength + kTimingSearch)
    throw ExtractionError("frame shorter than the preamble");
  Signature s;

  cplx acc(0.0, 0.0);
  for (std::size_t n = 0; n < waveform::kStsPeriod; ++n) acc += std::conj(rx[n]) * rx[n + waveform::kStsPeriod];
  s.coarse_cfo_hz = phase_to_hz(std::arg(acc), waveform::kStsPeriod, fs);

  const Samples r1 = derotate(rx, s.coarse_cfo_hz, fs);
  acc = cplx(0.0, 0.0);
  for (std::size_t k = 0; k < waveform::kLtfCp; ++k)
    acc += std::conj(r1[waveform::kStsLength + k]) * r1[waveform::kStsLength + waveform::kLtfLength + k];
  const std::size_t cp = grid.cp_length();
  for (std::size_t pos = waveform::kPreambleLength; pos + grid.symbol_length() <= r1.size(); pos += grid.symbol_length())
    for (std::size_t k = 0; k < cp; ++k) acc += std::conj(r1[pos + k]) * r1[pos + waveform::kFftSize + k];
  s.fine_cfo_hz = phase_to_hz(std::arg(acc), waveform::kLtfLength, fs);

  const Samples r2 = derotate(rx, s.cfo_hz(), fs);
  const Samples ltf = waveform::long_training_symbol();
  double ltf_energy = 0.0;
  for (const auto& v : ltf) ltf_energy += std::norm(v);
  std::vector<double> corr(2 * kTimingSearch + 1, 0.0);
  double best = -1.0, best_norm = 0.0;
  int best_i = 0;
  for (int i = 0; i <= 2 * kTimingSearch; ++i) {
    const long start = static_cast<long>(kLtfStart) + i - kTimingSearch;
    cplx c(0.0, 0.0);
    double e = 0.0;
    for (std::size_t n = 0; n < ltf.size(); ++n) {
      const long idx = start + static_cast<long>(n);
      if (idx < 0 || idx >= static_cast<long>(r2.size())) continue;
      c += r2[static_cast<std::size_t>(idx)] * std::conj(ltf[n]);
      e += std::norm(r2[static_cast<std::size_t>(idx)]);
    }
    corr[static_cast<std::size_t>(i)] = std::abs(c);
    if (std::abs(c) > best) {
      best = std::abs(c);
      best_i = i;
      best_norm = e > 0.0 ? best / std::sqrt(e * ltf_energy) : 0.0;
    }
  }
  if (!(best_norm >= kDetectionFloor)) throw ExtractionError("preamble not detected");
  double frac = 0.0;
  if (best_i > 0 && best_i < 2 * kTimingSearch) {
    const double ym = corr[static_cast<std::size_t>(best_i - 1)], y0 = corr[static_cast<std::size_t>(best_i)],
                 yp = corr[static_cast<std::size_t>(best_i + 1)];
    const double den = ym - 2.0 * y0 + yp;
    if (den < 0.0) frac = 0.5 * (ym - yp) / den;
  }
  s.timing_offset = best_i - kTimingSearch + frac;

  // Normalized pseudo-covariance (Re, Im) from the training fields and from
  // the data symbols, combined by inverse variance. The training fields are
  // proper by construction; random data adds a fluctuation of
  // n_data / (n_occ^2 n_sym) per component.
  const double noise = noise_power_estimate(rx);
  const auto part = [&](std::size_t lo, std::size_t hi, double& a, double& b, double& snr) {
    double rr = 0.0, ii = 0.0, ri = 0.0;
    for (std::size_t n = lo; n < hi; ++n) {
      rr += rx[n].real() * rx[n].real();
      ii += rx[n].imag() * rx[n].imag();
      ri += rx[n].imag() * rx[n].real();
    }
    const double len = static_cast<double>(hi - lo);
    const double sig = std::max((rr + ii) / len - noise, 1e-12 * (rr + ii) / len);
    a = (rr - ii) / len / sig;
    b = 2.0 * ri / len / sig;
    snr = noise > 0.0 ? sig / noise : 1e12;
  };
  double a = 0.0, b = 0.0, snr = 0.0;
  part(0, waveform::kPreambleLength, a, b, snr);
  const auto noise_var = [&](double m) { return (2.0 / snr + 1.0 / (snr * snr)) / m; };
  const std::size_t n_sym = (rx.size() - waveform::kPreambleLength) / grid.symbol_length();
  if (n_sym > 0) {
    double ad = 0.0, bd = 0.0, snr_d = 0.0;
    const std::size_t hi = waveform::kPreambleLength + n_sym * grid.symbol_length();
    part(waveform::kPreambleLength, hi, ad, bd, snr_d);
    const double n_occ = static_cast<double>(waveform::occupied_subcarriers().size());
    const double fluct = static_cast<double>(waveform::data_subcarriers().size()) / (n_occ * n_occ * static_cast<double>(n_sym));
    const double wp = 1.0 / noise_var(static_cast<double>(waveform::kPreambleLength));
    const double wd = 1.0 / (fluct + noise_var(static_cast<double>(hi - waveform::kPreambleLength)));
    a = (wp * a + wd * ad) / (wp + wd);
    b = (wp * b + wd * bd) / (wp + wd);
  }
  const double phi = std::asin(std::clamp(-b, -1.0, 1.0));
  const double ratio = std::clamp(a / std::cos(phi), -0.999, 0.999);
  s.phi_deg = phi * 180.0 / kPi;
  s.psi_db = 20.0 / std::numbers::ln10 * std::atanh(ratio);
  if (!s.to_vector().allFinite()) throw ExtractionError("non-finite signature");
  return s;
}

GaussianModel fit_gaussian(const Matrix& rows) {
  if (rows.rows() <= rows.cols()) throw std::invalid_argument("need more samples than dimensions");
  std::vector<std::size_t> idx(static_cast<std::size_t>(rows.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  return gaussian_on(rows, idx);
}

double mahalanobis(const GaussianModel& m, const Vector& x) {
  if (x.size() != m.mean.size()) throw std::invalid_argument("signature dimension mismatch");
  const Vector c = x - m.mean;
  return std::sqrt(std::max(0.0, c.dot(m.cov_inv * c)));
}

McdModel mcd_fit(const Matrix& rows, std::uint64_t seed, const McdOptions& opts) {
  const auto n = static_cast<std::size_t>(rows.rows());
  const auto d = static_cast<std::size_t>(rows.cols());
  if (n <= d + 1) throw std::invalid_argument("need more samples than dimensions + 1");
  if (!rows.allFinite()) throw nn::NumericError("non-finite signature in MCD input");
  std::size_t h = (n + d + 2) / 2;
  if (opts.h_fraction > 0.0)
    h = std::max(h, static_cast<std::size_t>(std::ceil(opts.h_fraction * static_cast<double>(n))));
  h = std::min(h, n);

  nn::Rng rng(seed);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  double best_ld = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_subset;
  bool any_reg = false;
  for (std::size_t r = 0; r < std::max<std::size_t>(opts.restarts, 1); ++r) {
    std::shuffle(all.begin(), all.end(), rng);
    std::size_t k = d + 1;
    std::vector<std::size_t> subset(all.begin(), all.begin() + static_cast<long>(k));
    GaussianModel g = gaussian_on(rows, subset);
    while (g.regularized && k < n) {
      subset.push_back(all[k++]);
      g = gaussian_on(rows, subset);
    }
    double ld = 0.0;
    for (std::size_t step = 0; step < opts.max_csteps; ++step) {
      subset = smallest(sq_distances(g, rows), h);
      double new_ld = 0.0;
      GaussianModel ng = gaussian_on(rows, subset, &new_ld);
      const bool converged = step > 0 && new_ld >= ld - 1e-12 * std::abs(ld);
      g = std::move(ng);
      ld = new_ld;
      if (converged) break;
    }
    if (ld < best_ld) {
      best_ld = ld;
      best_subset = subset;
      any_reg = g.regularized;
    }
  }

  McdModel m;
  static_cast<GaussianModel&>(m) = gaussian_on(rows, best_subset);
  m.regularized = any_reg || m.regularized;
  m.h = h;
  m.raw_support = best_subset;
  m.raw_det = std::exp(best_ld);
  finish(m, rows, opts.reweight);
  return m;
}

McdModel mcd_refit(const Matrix& rows, const McdModel& fitted) {
  McdModel m;
  double ld = 0.0;
  static_cast<GaussianModel&>(m) = gaussian_on(rows, fitted.raw_support, &ld);
  m.h = fitted.h;
  m.raw_support = fitted.raw_support;
  m.raw_det = std::exp(ld);
  finish(m, rows, fitted.support != fitted.raw_support);
  return m;
}

AuthDecision authenticate(const Vector& sig, const GaussianModel& model, double threshold) {
  return mahalanobis(model, sig) <= threshold ? AuthDecision::A : AuthDecision::O;
}

double chi2_threshold(int dim, double q) {
  if (dim < 1 || !(q > 0.0 && q < 1.0)) throw std::invalid_argument("bad chi-square threshold arguments");
  return std::sqrt(chi2_quantile(dim, q));
}

double quantile_threshold(const GaussianModel& model, const Matrix& rows, double q) {
  if (rows.rows() == 0 || !(q > 0.0 && q <= 1.0)) throw std::invalid_argument("bad quantile threshold arguments");
  std::vector<double> d = sq_distances(model, rows);
  std::sort(d.begin(), d.end());
  const double pos = q * static_cast<double>(d.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, d.size() - 1);
  const double v = d[lo] + (pos - static_cast<double>(lo)) * (d[hi] - d[lo]);
  return std::sqrt(std::max(0.0, v));
}

int identify(const Vector& sig, const std::vector<UserModel>& models) {
  if (models.empty()) throw std::invalid_argument("no user models");
  int best = models.front().user_id;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& u : models) {
    const double dist = mahalanobis(u.model, sig);
    if (dist < best_d) {
      best_d = dist;
      best = u.user_id;
    }
  }
  return best;
}

std::vector<SignatureRecord> make_signature_dataset(const AuthScenarioConfig& cfg, std::uint64_t seed) {
  if (cfg.n_users < 1 || cfg.n_authorized < 1 || cfg.n_authorized >= cfg.n_users)
    throw std::invalid_argument("need 1 <= authorized < users");
  std::vector<SignatureRecord> out;
  std::uint64_t stream = 0;
  for (int j = 1; j <= cfg.n_users; ++j) {
    const auto prof = ImpairmentProfile::for_user(j, cfg.cfo_step_hz);
    for (double snr : cfg.snrs_db) {
      for (int k = 0; k < cfg.per_user_snr; ++k) {
        waveform::Rng rng(derive_seed(seed, stream++));
        std::uniform_int_distribution<int> mcs(0, 8);
        waveform::IqFrame f = waveform::gen_wifi(mcs(rng), 0, waveform::OfdmGrid{}, cfg.n_samples, rng);
        f.samples = apply_impairments(f.samples, prof);
        f = waveform::add_awgn(f, snr, rng);
        try {
          out.push_back({j, snr, extract_signature(f.samples)});
        } catch (const ExtractionError&) {
        }
      }
    }
  }
  return out;
}

void save_signatures_csv(const std::vector<SignatureRecord>& recs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# deepwifi-csv signatures v1\n";
  out << "user_id,snr_db,coarse_cfo_hz,fine_cfo_hz,timing_offset,psi_db,phi_deg\n";
  out.precision(10);
  for (const auto& r : recs)
    out << r.user_id << ',' << r.snr_db << ',' << r.sig.coarse_cfo_hz << ',' << r.sig.fine_cfo_hz << ','
        << r.sig.timing_offset << ',' << r.sig.psi_db << ',' << r.sig.phi_deg << '\n';
}

AuthReport evaluate_auth(const std::vector<SignatureRecord>& recs, const AuthScenarioConfig& cfg,
                         std::uint64_t seed) {
  nn::Rng rng(seed);
  std::vector<std::size_t> train, test;
  for (int j = 1; j <= cfg.n_users; ++j) {
    std::vector<std::size_t> mine;
    for (std::size_t i = 0; i < recs.size(); ++i)
      if (recs[i].user_id == j) mine.push_back(i);
    if (j > cfg.n_authorized) {
      test.insert(test.end(), mine.begin(), mine.end());
      continue;
    }
    std::shuffle(mine.begin(), mine.end(), rng);
    const auto n_tr = static_cast<std::size_t>(std::lround(cfg.train_fraction * static_cast<double>(mine.size())));
    train.insert(train.end(), mine.begin(), mine.begin() + static_cast<long>(n_tr));
    test.insert(test.end(), mine.begin() + static_cast<long>(n_tr), mine.end());
  }
  auto rows_of = [&](const std::vector<std::size_t>& idx) {
    Matrix m(static_cast<Eigen::Index>(idx.size()), kSignatureDim);
    for (std::size_t i = 0; i < idx.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = recs[idx[i]].sig.to_vector().transpose();
    return m;
  };
  const Matrix tr = rows_of(train);
  const McdModel mcd = mcd_fit(tr, derive_seed(seed, 1));

  AuthReport rep;
  rep.regularized = mcd.regularized;
  rep.threshold = cfg.rule == ThresholdRule::chi2 ? chi2_threshold(kSignatureDim, cfg.chi2_q)
                                                  : quantile_threshold(mcd, tr, cfg.quantile);
  std::size_t n_out = 0, n_auth = 0;
  for (auto i : test) {
    const int truth = recs[i].user_id <= cfg.n_authorized ? 0 : 1;
    const int pred = authenticate(recs[i].sig.to_vector(), mcd, rep.threshold) == AuthDecision::A ? 0 : 1;
    rep.confusion[truth][pred] += 1.0;
    (truth ? n_out : n_auth)++;
  }
  rep.n_test = test.size();
  if (n_out) rep.outlier_false_accept = rep.confusion[1][0] / static_cast<double>(n_out);
  if (n_auth) rep.authorized_false_reject = rep.confusion[0][1] / static_cast<double>(n_auth);
  for (auto& row : rep.confusion)
    for (auto& v : row) v /= std::max<double>(1.0, static_cast<double>(test.size()));
  rep.accuracy = rep.confusion[0][0] + rep.confusion[1][1];

  std::vector<UserModel> users;
  for (int j = 1; j <= cfg.n_authorized; ++j) {
    std::vector<std::size_t> mine;
    for (auto i : train)
      if (recs[i].user_id == j) mine.push_back(i);
    users.push_back({j, fit_gaussian(rows_of(mine))});
  }
  std::size_t id_total = 0, id_ok = 0;
  for (auto i : test) {
    if (recs[i].user_id > cfg.n_authorized || recs[i].snr_db < cfg.identify_min_snr_db) continue;
    ++id_total;
    if (identify(recs[i].sig.to_vector(), users) == recs[i].user_id) ++id_ok;
  }
  rep.identification_accuracy = id_total ? static_cast<double>(id_ok) / static_cast<double>(id_total) : 0.0;
  return rep;
}

void save_auth_csv(const AuthReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# deepwifi-csv auth_confusion v1\n";
  out << "true_class,pred_A,pred_O\n";
  out.precision(10);
  out << "A," << rep.confusion[0][0] << ',' << rep.confusion[0][1] << '\n';
  out << "O," << rep.confusion[1][0] << ',' << rep.confusion[1][1] << '\n';
}

void save_auth_metrics_csv(const AuthReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# deepwifi-csv auth_metrics v1\n";
  out << "accuracy,outlier_false_accept,authorized_false_reject,identification_accuracy,threshold,n_test,regularized\n";
  out.precision(10);
  out << rep.accuracy << ',' << rep.outlier_false_accept << ',' << rep.authorized_false_reject << ','
      << rep.identification_accuracy << ',' << rep.threshold << ',' << rep.n_test << ',' << (rep.regularized ? 1 : 0)
      << '\n';
}

}  // namespace deepwifi::authfp
