#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "deepwifi/util.hpp"
#include "deepwifi/waveform.hpp"

using namespace deepwifi::waveform;

TEST_CASE("ofdm grid partitions 64 subcarriers") {
  OfdmGrid grid;
  CHECK(data_subcarriers().size() == 40);
  CHECK(pilot_subcarriers().size() == 8);
  CHECK(null_subcarriers().size() == 16);
  CHECK(grid.n_data + grid.n_pilot + grid.n_null == grid.fft_size);
  std::set<int> all(data_subcarriers().begin(), data_subcarriers().end());
  all.insert(pilot_subcarriers().begin(), pilot_subcarriers().end());
  all.insert(null_subcarriers().begin(), null_subcarriers().end());
  CHECK(all.size() == 64);
  CHECK(kPreambleLength == 288);
  CHECK(data_symbol_count(2048, grid) == 11);
}

TEST_CASE("delay profile table") {
  const auto& a = channel_model(ChannelId::A);
  CHECK(a.n_taps == 1);
  CHECK(a.rms_delay_ns == 0);
  const auto& f = channel_model(ChannelId::F);
  CHECK(f.n_taps == 18);
  CHECK(f.max_delay_ns == 1050);
  CHECK(f.rms_delay_ns == 150);
  CHECK(f.n_clusters == 6);
  CHECK(channel_model(ChannelId::D).rician_k_db == 3);
  CHECK(channel_model(ChannelId::C).n_taps == 14);
}

TEST_CASE("constellations are unit power and Gray coded") {
  for (auto m : {Modulation::bpsk, Modulation::qpsk, Modulation::qam16, Modulation::qam64, Modulation::qam256}) {
    const auto& pts = constellation(m);
    CHECK(pts.size() == (1u << bits_per_symbol(m)));
    double p = 0.0;
    for (auto& v : pts) p += std::norm(v);
    CHECK(p / static_cast<double>(pts.size()) == doctest::Approx(1.0).epsilon(1e-12));
    // nearest neighbours differ in exactly one bit
    double dmin = 1e9;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) dmin = std::min(dmin, std::abs(pts[i] - pts[j]));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (std::abs(std::abs(pts[i] - pts[j]) - dmin) < 1e-9) CHECK(std::popcount(i ^ j) == 1);
  }
}

TEST_CASE("mcs modulation column") {
  CHECK(mcs_modulation(0) == Modulation::bpsk);
  CHECK(mcs_modulation(2) == Modulation::qpsk);
  CHECK(mcs_modulation(4) == Modulation::qam16);
  CHECK(mcs_modulation(7) == Modulation::qam64);
  CHECK(mcs_modulation(8) == Modulation::qam256);
  CHECK_THROWS(mcs_modulation(9));
}

TEST_CASE("noise frame spectrum lies in [-100, -80] dB") {
  Rng rng(4);
  IqFrame f = gen_noise(2048, rng);
  CHECK(f.label == Label::I);
  const auto spec = fft(f.samples);
  for (auto& v : spec) {
    const double db = 20.0 * std::log10(std::abs(v));
    CHECK(db >= -100.0 - 1e-9);
    CHECK(db <= -80.0 + 1e-9);
  }
  CHECK(mean_power(f.samples) > 0.0);
  Rng r1(9), r2(9);
  CHECK(gen_noise(256, r1).samples == gen_noise(256, r2).samples);
}

TEST_CASE("wifi round trip is bit exact for every mcs and both guards") {
  for (auto gi : {GuardInterval::long_800ns, GuardInterval::short_400ns}) {
    OfdmGrid grid;
    grid.guard = gi;
    for (int mcs = 0; mcs <= 8; ++mcs) {
      Rng rng(static_cast<std::uint64_t>(mcs) + 1);
      Bits sent;
      IqFrame f = gen_wifi(mcs, 0, grid, 2048, rng, &sent);
      CHECK(f.label == Label::W);
      CHECK(sent.size() == frame_bit_capacity(mcs, 2048, grid));
      CHECK(demod_wifi(f.samples, mcs, grid) == sent);
    }
  }
}

TEST_CASE("wifi data bins carry the mcs constellation") {
  OfdmGrid grid;
  for (int mcs : {0, 8}) {
    Rng rng(3);
    IqFrame f = gen_wifi(mcs, 0, grid, 2048, rng);
    const std::size_t start = kPreambleLength + grid.cp_length();
    Samples sym(f.samples.begin() + static_cast<long>(start), f.samples.begin() + static_cast<long>(start + kFftSize));
    const auto y = fft(sym);
    const auto& pts = constellation(mcs_modulation(mcs));
    const double scale = kFftSize / std::sqrt(48.0);
    for (int k : data_subcarriers()) {
      const auto v = y[static_cast<std::size_t>((k + 128) % 128)] / scale;
      double best = 1e9;
      for (auto& p : pts) best = std::min(best, std::abs(v - p));
      CHECK(best < 1e-9);
      if (mcs == 0) CHECK(std::abs(v.imag()) < 1e-9);
    }
  }
}

TEST_CASE("payload limits") {
  OfdmGrid grid;
  Rng rng(1);
  CHECK_THROWS_AS(gen_wifi(0, 1000, grid, 2048, rng), std::invalid_argument);
  CHECK_NOTHROW(gen_wifi(8, 400, grid, 2048, rng));
}

TEST_CASE("jammer statistics and band occupancy") {
  Rng rng(17);
  IqFrame j = gen_jammer(2048, rng);
  cplx mean(0.0, 0.0);
  for (auto& v : j.samples) mean += v;
  mean /= 2048.0;
  CHECK(std::abs(mean) < 5.0 / std::sqrt(2048.0));
  CHECK(mean_power(j.samples) == doctest::Approx(1.0).epsilon(0.1));
  Rng wr(18);
  IqFrame w = gen_wifi(3, 0, OfdmGrid{}, 2048, wr);
  const double ratio_db = 10.0 * std::log10(in_band_fraction(w.samples) / in_band_fraction(j.samples));
  CHECK(std::abs(ratio_db) < 3.0);
}

TEST_CASE("model A is a single complex gain") {
  Rng rng(2);
  auto taps = draw_channel_taps(channel_model(ChannelId::A), rng);
  CHECK(taps.size() == 1);
  double p = 0.0;
  for (int i = 0; i < 4000; ++i) p += std::norm(draw_channel_taps(channel_model(ChannelId::A), rng)[0]);
  CHECK(p / 4000 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("channel preserves energy in expectation") {
  Rng frame_rng(5);
  IqFrame j = gen_jammer(1024, frame_rng);
  const double e_in = mean_power(j.samples);
  for (const auto& model : channel_models()) {
    CAPTURE(channel_name(model.id));
    Rng rng(100 + static_cast<std::uint64_t>(model.id));
    double ratio = 0.0;
    for (int t = 0; t < 1000; ++t) ratio += mean_power(apply_channel(j, model, rng).samples) / e_in;
    CHECK(ratio / 1000.0 == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("awgn hits the requested snr") {
  Rng rng(6);
  IqFrame w = gen_wifi(2, 0, OfdmGrid{}, 2048, rng);
  for (double snr : {0.0, 10.0, 25.0}) {
    IqFrame n = add_awgn(w, snr, rng);
    Samples noise(w.samples.size());
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = n.samples[i] - w.samples[i];
    const double measured = 10.0 * std::log10(mean_power(w.samples) / mean_power(noise));
    CHECK(std::abs(measured - snr) < 0.5);
  }
  Bits sent;
  Rng r2(7);
  IqFrame clean = gen_wifi(0, 0, OfdmGrid{}, 2048, r2, &sent);
  CHECK(demod_wifi(add_awgn(clean, 60.0, r2).samples, 0, OfdmGrid{}) == sent);
  Rng a(1), b(1);
  CHECK(add_awgn(clean, 5.0, a).samples == add_awgn(clean, 5.0, b).samples);
}

TEST_CASE("dataset balance and split") {
  DatasetConfig cfg;
  cfg.n_per_class = 30;
  cfg.n_samples = 512;
  Dataset ds = make_dataset(cfg, 42);
  CHECK(ds.frames.size() == 90);
  int counts[3] = {0, 0, 0};
  int per_model[6] = {0, 0, 0, 0, 0, 0};
  for (auto& f : ds.frames) {
    counts[static_cast<int>(f.label)]++;
    per_model[static_cast<int>(f.channel)]++;
  }
  CHECK(counts[0] == 30);
  CHECK(counts[1] == 30);
  CHECK(counts[2] == 30);
  for (int m = 0; m < 6; ++m) CHECK(per_model[m] == 15);
  CHECK(ds.train.size() == 72);
  CHECK(ds.test.size() == 18);
  int train_counts[3] = {0, 0, 0};
  for (auto i : ds.train) train_counts[static_cast<int>(ds.frames[i].label)]++;
  CHECK(train_counts[0] == 24);
  CHECK(train_counts[2] == 24);

  std::stringstream ss;
  write_dataset(ds, ss);
  Dataset back = read_dataset(ss);
  CHECK(back.frames.size() == 90);
  CHECK(back.train == ds.train);
  CHECK(back.frames[7].samples == ds.frames[7].samples);
  CHECK(back.frames[4].label == ds.frames[4].label);

  Dataset again = make_dataset(cfg, 42);
  CHECK(again.frames[31].samples == ds.frames[31].samples);
}

TEST_CASE("desk-scale dataset is 1200 frames, 200 per model") {
  DatasetConfig cfg;  // defaults
  CHECK(cfg.n_per_class * 3 == 1200);
  CHECK(cfg.n_per_class * 3 / cfg.models.size() == 200);
}
