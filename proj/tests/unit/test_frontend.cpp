#include <doctest.h>

#include <cmath>
#include <numbers>

#include "deepwifi/frontend.hpp"

using namespace deepwifi;
using namespace deepwifi::frontend;
using waveform::cplx;

namespace {

Samples tone(double f, std::size_t n) {
  Samples s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = std::polar(1.0, 2.0 * std::numbers::pi * f * static_cast<double>(i));
  return s;
}

double middle_power(const Samples& s) {
  double p = 0.0;
  const std::size_t lo = s.size() / 4, hi = 3 * s.size() / 4;
  for (std::size_t i = lo; i < hi; ++i) p += std::norm(s[i]);
  return p / static_cast<double>(hi - lo);
}

}  // namespace

TEST_CASE("adc codes") {
  const int mid = quantize_code(0.0, 8);
  CHECK((mid == 127 || mid == 128));
  CHECK(quantize_code(2.0, 8) == 255);
  CHECK(quantize_code(-2.0, 8) == 0);
  CHECK(code_value(255, 8) == 1.0);
  CHECK(code_value(0, 8) == -1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng);
    worst = std::max(worst, std::abs(code_value(quantize_code(x, 8), 8) - x));
  }
  CHECK(worst <= 1.0 / 255.0 + 1e-15);
  Samples s = digitize({cplx(0.5, -3.0)}, 8);
  CHECK(s[0].imag() == -1.0);
}

TEST_CASE("bandpass passes in-band and rejects out-of-band tones") {
  FrontEndConfig cfg;
  for (double f : {0.0, 0.1, -0.15, 0.19}) {
    CAPTURE(f);
    const double gain_db = 10.0 * std::log10(middle_power(bandpass(tone(f, 2048), cfg)));
    CHECK(std::abs(gain_db) <= 1.0);
  }
  for (double f : {0.32, -0.35, 0.45}) {
    CAPTURE(f);
    const double gain_db = 10.0 * std::log10(middle_power(bandpass(tone(f, 2048), cfg)));
    CHECK(gain_db <= -40.0);
  }
  Samples zeros(300, cplx(0.0, 0.0));
  for (auto& v : bandpass(zeros, cfg)) CHECK(v == cplx(0.0, 0.0));
  FrontEndConfig bad;
  bad.band_low = 0.3;
  bad.band_high = 0.1;
  CHECK_THROWS(bandpass(zeros, bad));
}

TEST_CASE("preprocess interleaves I and Q") {
  FrontEndConfig cfg;
  Samples s(64, cplx(0.0, 0.0));
  Vector v = preprocess(s, cfg);
  CHECK(v.size() == 128);
  Samples back = to_samples(v);
  CHECK(back.size() == 64);
  CHECK(back[3].real() == v[6]);
  CHECK(back[3].imag() == v[7]);
}

TEST_CASE("small denoising autoencoder trains and encodes deterministically") {
  waveform::DatasetConfig dc;
  dc.n_per_class = 30;
  dc.n_samples = 448;
  auto ds = waveform::make_dataset(dc, 5);
  FrontEndConfig fe;
  const Matrix tr = preprocess_frames(ds.frames, ds.train, fe);
  const Matrix te = preprocess_frames(ds.frames, ds.test, fe);
  DaeConfig cfg;
  cfg.hidden = {48, 8, 48};
  cfg.epochs = 15;
  cfg.batch = 16;
  auto res = train_dae(tr, te, cfg);
  CHECK(res.history.size() == 16);
  CHECK(res.history.back().test_loss < res.history.front().test_loss);
  CHECK(res.dae.latent_dim() == 8);
  const Vector a = encode(res.dae, Vector(te.col(0)));
  const Vector b = encode(res.dae, Vector(te.col(0)));
  CHECK(a == b);
  CHECK(a.size() == 8);
  // idle and WiFi frames land in different places
  const Matrix lat = encode(res.dae, te);
  double dist = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < ds.test.size(); ++i)
    for (std::size_t j = 0; j < ds.test.size(); ++j)
      if (ds.frames[ds.test[i]].label == waveform::Label::I && ds.frames[ds.test[j]].label == waveform::Label::W) {
        dist += (lat.col(static_cast<Eigen::Index>(i)) - lat.col(static_cast<Eigen::Index>(j))).norm();
        ++pairs;
      }
  CHECK(dist / pairs > 0.0);
  const Matrix zero_out = reconstruct(res.dae, Matrix::Zero(tr.rows(), 1));
  CHECK(zero_out.allFinite());
  CHECK_THROWS(encode(res.dae, Vector(Vector::Zero(10))));
  CHECK(std::isfinite(oob_suppression_db(res.dae, te, cfg.noise_variance, 3, fe)));
}

TEST_CASE("out-of-band power of tones") {
  FrontEndConfig fe;
  CHECK(out_of_band_power(tone(0.125, 256), fe) < 1e-20);
  CHECK(out_of_band_power(tone(0.375, 256), fe) == doctest::Approx(1.0));
  CHECK(out_of_band_power(tone(-0.375, 256), fe) == doctest::Approx(1.0));
}

TEST_CASE("relative mse") {
  Matrix x(2, 2);
  x << 1, 0, 0, 1;
  CHECK(relative_mse(x, x) == 0.0);
  CHECK(relative_mse(x, Matrix::Zero(2, 2)) == 1.0);
}

TEST_CASE("standardizer") {
  Matrix x(2, 4);
  x << 1, 2, 3, 4, 5, 5, 5, 5;
  auto s = Standardizer::fit(x);
  Matrix z = s.apply(x);
  CHECK(z.row(0).mean() == doctest::Approx(0.0));
  CHECK(std::sqrt(z.row(0).squaredNorm() / 4) == doctest::Approx(1.0));
  CHECK(z.row(1).isZero());
}

TEST_CASE("pca on isotropic data spreads variance evenly") {
  const int d = 10;
  nn::Rng rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(20000, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  auto r = pca_fit(x, 3);
  REQUIRE(r.components.cols() == 3);
  CHECK(r.explained_ratio()[0] == doctest::Approx(1.0 / d).epsilon(0.15));
  const Matrix gram = r.components.transpose() * r.components;
  CHECK((gram - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pca on a line") {
  nn::Rng rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector dir(5);
  dir << 1, 2, -1, 0.5, 3;
  dir.normalize();
  Matrix x(500, 5);
  for (int i = 0; i < 500; ++i) x.row(i) = (g(rng) * dir + 1e-3 * Vector::NullaryExpr(5, [&] { return g(rng); })).transpose();
  auto r = pca_fit(x, 2);
  CHECK(r.explained_ratio()[0] > 0.99);
  CHECK(std::abs(std::abs(r.components.col(0).dot(dir)) - 1.0) < 1e-6);

  Matrix exact(50, 4);
  for (int i = 0; i < 50; ++i) exact.row(i) = (g(rng) * dir.head(4)).transpose();
  auto t = pca_fit(exact, 3);
  CHECK(t.truncated);
  CHECK(t.components.cols() == 1);
  CHECK_THROWS(pca_fit(exact, 5));
}
