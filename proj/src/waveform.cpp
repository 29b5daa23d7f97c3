#include "deepwifi/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

#include "deepwifi/util.hpp"

namespace deepwifi::waveform {

namespace {

constexpr std::uint64_t kPreambleSeed = 0x5eed0f0000ULL;
constexpr int kMaxOccupied = 24;

std::size_t bin_of(int subcarrier) {
  return static_cast<std::size_t>((subcarrier + static_cast<int>(kFftSize)) % static_cast<int>(kFftSize));
}

cplx random_qpsk(Rng& rng) {
  std::uniform_int_distribution<int> q(0, 3);
  const int v = q(rng);
  return cplx(v & 1 ? 1.0 : -1.0, v & 2 ? 1.0 : -1.0) / std::numbers::sqrt2;
}

// Bin -k gets conj(v) * (+-i), alternating per pair, so X_k X_{-k} sums to
// zero and the training fields carry no pseudo-covariance.
void fill_pair(std::vector<cplx>& freq, int k, cplx v, int pair) {
  freq[bin_of(k)] = v;
  freq[bin_of(-k)] = std::conj(v) * cplx(0.0, pair % 2 == 0 ? 1.0 : -1.0);
}

// +1 on the positive pilots, mirrored like the training fields.
cplx pilot_value(int k) {
  if (k > 0) return cplx(1.0, 0.0);
  return cplx(0.0, ((-k - 3) / 6) % 2 == 0 ? 1.0 : -1.0);
}

struct PreambleParts {
  Samples sts;  // 128 samples
  std::vector<cplx> ltf_freq;  // indexed by FFT bin
  Samples ltf;  // 128 samples, no CP
  Samples full;
};

const PreambleParts& preamble_parts() {
  static const PreambleParts parts = [] {
    PreambleParts p;
    Rng rng(kPreambleSeed);
    Samples sts_freq(kFftSize, cplx(0.0, 0.0));
    int n_sts = 0;
    int pair = 0;
    for (int k : occupied_subcarriers()) {
      if (k > 0 && k % 2 == 0) {
        fill_pair(sts_freq, k, random_qpsk(rng), pair++);
        n_sts += 2;
      }
    }
    p.sts = ifft(sts_freq);
    const double sts_scale = static_cast<double>(kFftSize) / std::sqrt(static_cast<double>(n_sts));
    for (auto& s : p.sts) s *= sts_scale;

    p.ltf_freq.assign(kFftSize, cplx(0.0, 0.0));
    pair = 0;
    for (int k : occupied_subcarriers())
      if (k > 0) fill_pair(p.ltf_freq, k, random_qpsk(rng), pair++);
    p.ltf = ifft(p.ltf_freq);
    const double ltf_scale =
        static_cast<double>(kFftSize) / std::sqrt(static_cast<double>(occupied_subcarriers().size()));
    for (auto& s : p.ltf) s *= ltf_scale;

    p.full = p.sts;
    p.full.insert(p.full.end(), p.ltf.end() - static_cast<long>(kLtfCp), p.ltf.end());
    p.full.insert(p.full.end(), p.ltf.begin(), p.ltf.end());
    return p;
  }();
  return parts;
}

// Gray-coded PAM levels for m bits: value index -> amplitude (unnormalized).
std::vector<double> gray_pam(int m) {
  const int levels = 1 << m;
  std::vector<double> out(static_cast<std::size_t>(levels));
  for (int code = 0; code < levels; ++code) {
    int bin = code;
    for (int shift = 1; shift < m; shift <<= 1) bin ^= bin >> shift;
    // code is the Gray pattern; bin its position along the axis
    out[static_cast<std::size_t>(code)] = 2.0 * bin - (levels - 1);
  }
  return out;
}

std::vector<cplx> build_constellation(Modulation m) {
  const int b = bits_per_symbol(m);
  if (m == Modulation::bpsk) return {cplx(-1.0, 0.0), cplx(1.0, 0.0)};
  const int half = b / 2;
  const auto pam = gray_pam(half);
  const int size = 1 << b;
  std::vector<cplx> pts(static_cast<std::size_t>(size));
  double power = 0.0;
  for (int v = 0; v < size; ++v) {
    const int ib = v >> half;
    const int qb = v & ((1 << half) - 1);
    pts[static_cast<std::size_t>(v)] = cplx(pam[static_cast<std::size_t>(ib)], pam[static_cast<std::size_t>(qb)]);
    power += std::norm(pts[static_cast<std::size_t>(v)]);
  }
  const double scale = 1.0 / std::sqrt(power / size);
  for (auto& p : pts) p *= scale;
  return pts;
}

bool in_band(std::size_t bin, std::size_t n) {
  const double k = bin < n / 2 ? static_cast<double>(bin) : static_cast<double>(bin) - static_cast<double>(n);
  const double f = k * kSampleRate / static_cast<double>(n);
  return std::abs(f) <= (kMaxOccupied + 0.5) * kSubcarrierSpacing;
}

void require_frame_length(std::size_t n) {
  if (n < kFftSize) throw std::invalid_argument("frame length must be at least the FFT size");
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated dataset file");
  return v;
}

}  // namespace

char label_char(Label l) {
  switch (l) {
    case Label::I: return 'I';
    case Label::W: return 'W';
    case Label::J: return 'J';
  }
  return '?';
}

Label label_from_char(char c) {
  switch (c) {
    case 'I': return Label::I;
    case 'W': return Label::W;
    case 'J': return Label::J;
    default: throw std::invalid_argument(std::string("unknown label ") + c);
  }
}

std::string channel_name(ChannelId id) {
  if (id == ChannelId::none) return "none";
  return std::string(1, static_cast<char>('A' + static_cast<int>(id)));
}

ChannelId channel_from_name(const std::string& s) {
  if (s == "none") return ChannelId::none;
  if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'F') return static_cast<ChannelId>(s[0] - 'A');
  throw std::invalid_argument("unknown channel model: " + s);
}

const std::array<ChannelModel, 6>& channel_models() {
  static const std::array<ChannelModel, 6> models = {{
      {ChannelId::A, 5, 0, 0, 0, 1, 1},
      {ChannelId::B, 5, 15, 80, 0, 9, 2},
      {ChannelId::C, 5, 30, 200, 0, 14, 2},
      {ChannelId::D, 10, 50, 390, 3, 18, 3},
      {ChannelId::E, 20, 100, 730, 6, 18, 4},
      {ChannelId::F, 30, 150, 1050, 6, 18, 6},
  }};
  return models;
}

const ChannelModel& channel_model(ChannelId id) {
  if (id == ChannelId::none) throw std::invalid_argument("no channel model for 'none'");
  return channel_models().at(static_cast<std::size_t>(id));
}

const std::vector<int>& pilot_subcarriers() {
  static const std::vector<int> p = {-21, -15, -9, -3, 3, 9, 15, 21};
  return p;
}

const std::vector<int>& occupied_subcarriers() {
  static const std::vector<int> occ = [] {
    std::vector<int> v;
    for (int k = -kMaxOccupied; k <= kMaxOccupied; ++k)
      if (k != 0) v.push_back(k);
    return v;
  }();
  return occ;
}

const std::vector<int>& data_subcarriers() {
  static const std::vector<int> d = [] {
    std::vector<int> v;
    for (int k : occupied_subcarriers())
      if (std::find(pilot_subcarriers().begin(), pilot_subcarriers().end(), k) == pilot_subcarriers().end())
        v.push_back(k);
    return v;
  }();
  return d;
}

const std::vector<int>& null_subcarriers() {
  static const std::vector<int> n = [] {
    std::vector<int> v;
    for (int k = -32; k < 32; ++k)
      if (k == 0 || std::abs(k) > kMaxOccupied) v.push_back(k);
    return v;
  }();
  return n;
}

int bits_per_symbol(Modulation m) {
  switch (m) {
    case Modulation::bpsk: return 1;
    case Modulation::qpsk: return 2;
    case Modulation::qam16: return 4;
    case Modulation::qam64: return 6;
    case Modulation::qam256: return 8;
  }
  return 0;
}

std::string modulation_name(Modulation m) {
  switch (m) {
    case Modulation::bpsk: return "BPSK";
    case Modulation::qpsk: return "QPSK";
    case Modulation::qam16: return "16-QAM";
    case Modulation::qam64: return "64-QAM";
    case Modulation::qam256: return "256-QAM";
  }
  return "?";
}

Modulation mcs_modulation(int mcs_id) {
  static const Modulation table[] = {Modulation::bpsk,  Modulation::qpsk,  Modulation::qpsk,
                                     Modulation::qam16, Modulation::qam16, Modulation::qam64,
                                     Modulation::qam64, Modulation::qam64, Modulation::qam256};
  if (mcs_id < 0 || mcs_id > 8) throw std::invalid_argument("mcs_id must be in 0..8");
  return table[mcs_id];
}

const std::vector<cplx>& constellation(Modulation m) {
  static const std::array<std::vector<cplx>, 5> all = {
      build_constellation(Modulation::bpsk), build_constellation(Modulation::qpsk),
      build_constellation(Modulation::qam16), build_constellation(Modulation::qam64),
      build_constellation(Modulation::qam256)};
  return all[static_cast<std::size_t>(m)];
}

std::vector<cplx> modulate(const Bits& bits, Modulation m) {
  const int b = bits_per_symbol(m);
  if (bits.size() % static_cast<std::size_t>(b) != 0)
    throw std::invalid_argument("bit count is not a multiple of bits per symbol");
  const auto& pts = constellation(m);
  std::vector<cplx> out(bits.size() / static_cast<std::size_t>(b));
  for (std::size_t s = 0; s < out.size(); ++s) {
    int v = 0;
    for (int i = 0; i < b; ++i) v = (v << 1) | (bits[s * static_cast<std::size_t>(b) + static_cast<std::size_t>(i)] & 1);
    out[s] = pts[static_cast<std::size_t>(v)];
  }
  return out;
}

Bits demodulate(const std::vector<cplx>& symbols, Modulation m) {
  const int b = bits_per_symbol(m);
  const auto& pts = constellation(m);
  Bits out;
  out.reserve(symbols.size() * static_cast<std::size_t>(b));
  if (m == Modulation::bpsk) {
    for (const auto& s : symbols) out.push_back(s.real() >= 0.0 ? 1 : 0);
    return out;
  }
  // Square QAM: slice I and Q independently against the Gray PAM axis.
  const int half = b / 2;
  const int levels = 1 << half;
  const double scale = std::abs(pts[0].real()) / static_cast<double>(levels - 1);
  const auto pam = gray_pam(half);
  std::vector<int> code_at(static_cast<std::size_t>(levels));
  for (int code = 0; code < levels; ++code)
    code_at[static_cast<std::size_t>((pam[static_cast<std::size_t>(code)] + (levels - 1)) / 2)] = code;
  auto slice = [&](double x) {
    const double pos = (x / scale + (levels - 1)) / 2.0;
    const int idx = std::clamp(static_cast<int>(std::lround(pos)), 0, levels - 1);
    return code_at[static_cast<std::size_t>(idx)];
  };
  for (const auto& s : symbols) {
    const int v = (slice(s.real()) << half) | slice(s.imag());
    for (int i = b - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((v >> i) & 1));
  }
  return out;
}

Samples fft(const Samples& x) {
  Eigen::FFT<double> engine;
  Samples out;
  engine.fwd(out, x);
  return out;
}

Samples ifft(const Samples& x) {
  Eigen::FFT<double> engine;
  Samples out;
  engine.inv(out, x);
  return out;
}

double mean_power(const Samples& s) {
  if (s.empty()) return 0.0;
  double p = 0.0;
  for (const auto& v : s) p += std::norm(v);
  return p / static_cast<double>(s.size());
}

double in_band_fraction(const Samples& s) {
  const Samples spec = fft(s);
  double in = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double p = std::norm(spec[k]);
    total += p;
    if (in_band(k, spec.size())) in += p;
  }
  return total > 0.0 ? in / total : 0.0;
}

IqFrame gen_noise(std::size_t n_samples, Rng& rng) {
  require_frame_length(n_samples);
  std::uniform_real_distribution<double> mag_db(-100.0, -80.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Samples spec(n_samples);
  for (auto& v : spec) v = std::polar(std::pow(10.0, mag_db(rng) / 20.0), phase(rng));
  IqFrame f;
  f.samples = ifft(spec);
  f.label = Label::I;
  f.snr_db = std::numeric_limits<double>::quiet_NaN();
  return f;
}

std::size_t data_symbol_count(std::size_t n_samples, const OfdmGrid& grid) {
  if (n_samples < kPreambleLength) return 0;
  return (n_samples - kPreambleLength) / grid.symbol_length();
}

std::size_t frame_bit_capacity(int mcs_id, std::size_t n_samples, const OfdmGrid& grid) {
  return data_symbol_count(n_samples, grid) * data_subcarriers().size() *
         static_cast<std::size_t>(bits_per_symbol(mcs_modulation(mcs_id)));
}

std::size_t burst_length(std::size_t n_samples, const OfdmGrid& grid) {
  return kPreambleLength + data_symbol_count(n_samples, grid) * grid.symbol_length();
}

const Samples& preamble() { return preamble_parts().full; }

Samples long_training_symbol() { return preamble_parts().ltf; }

IqFrame gen_wifi(int mcs_id, std::size_t payload_bytes, const OfdmGrid& grid, std::size_t n_samples, Rng& rng,
                 Bits* bits_out) {
  const Modulation mod = mcs_modulation(mcs_id);
  const std::size_t n_sym = data_symbol_count(n_samples, grid);
  if (n_sym == 0) throw std::invalid_argument("frame too short for preamble and one data symbol");
  const std::size_t capacity = frame_bit_capacity(mcs_id, n_samples, grid);
  if (payload_bytes * 8 > capacity) throw std::invalid_argument("payload too large for frame length");

  std::bernoulli_distribution coin(0.5);
  Bits bits(capacity, 0);
  const std::size_t payload_bits = payload_bytes == 0 ? capacity : payload_bytes * 8;
  for (std::size_t i = 0; i < payload_bits; ++i) bits[i] = coin(rng) ? 1 : 0;
  const auto symbols = modulate(bits, mod);

  IqFrame f;
  f.label = Label::W;
  f.mcs_id = mcs_id;
  f.snr_db = std::numeric_limits<double>::quiet_NaN();
  f.samples.assign(n_samples, cplx(0.0, 0.0));
  const auto& pre = preamble();
  std::copy(pre.begin(), pre.end(), f.samples.begin());

  const auto& data = data_subcarriers();
  const double scale = static_cast<double>(kFftSize) / std::sqrt(static_cast<double>(occupied_subcarriers().size()));
  std::size_t pos = kPreambleLength;
  std::size_t si = 0;
  for (std::size_t s = 0; s < n_sym; ++s) {
    Samples freq(kFftSize, cplx(0.0, 0.0));
    for (int k : data) freq[bin_of(k)] = symbols[si++];
    for (int k : pilot_subcarriers()) freq[bin_of(k)] = pilot_value(k);
    Samples t = ifft(freq);
    const std::size_t cp = grid.cp_length();
    for (std::size_t i = 0; i < cp; ++i) f.samples[pos + i] = t[kFftSize - cp + i] * scale;
    for (std::size_t i = 0; i < kFftSize; ++i) f.samples[pos + cp + i] = t[i] * scale;
    pos += grid.symbol_length();
  }
  if (bits_out != nullptr) *bits_out = std::move(bits);
  return f;
}

Bits demod_wifi(const Samples& samples, int mcs_id, const OfdmGrid& grid) {
  const Modulation mod = mcs_modulation(mcs_id);
  const std::size_t n_sym = data_symbol_count(samples.size(), grid);
  const auto& parts = preamble_parts();
  Samples ltf_rx(samples.begin() + static_cast<long>(kStsLength + kLtfCp),
                 samples.begin() + static_cast<long>(kPreambleLength));
  const Samples y_ltf = fft(ltf_rx);
  std::vector<cplx> h(kFftSize, cplx(1.0, 0.0));
  for (int k : occupied_subcarriers()) {
    const std::size_t b = bin_of(k);
    h[b] = y_ltf[b] / parts.ltf_freq[b];
  }
  std::vector<cplx> symbols;
  symbols.reserve(n_sym * data_subcarriers().size());
  for (std::size_t s = 0; s < n_sym; ++s) {
    const std::size_t start = kPreambleLength + s * grid.symbol_length() + grid.cp_length();
    Samples sym(samples.begin() + static_cast<long>(start), samples.begin() + static_cast<long>(start + kFftSize));
    const Samples y = fft(sym);
    for (int k : data_subcarriers()) {
      const std::size_t b = bin_of(k);
      symbols.push_back(y[b] / h[b]);
    }
  }
  return demodulate(symbols, mod);
}

IqFrame gen_jammer(std::size_t n_samples, Rng& rng) {
  require_frame_length(n_samples);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  Samples white(n_samples);
  for (auto& v : white) v = cplx(g(rng), g(rng));
  Samples spec = fft(white);
  for (std::size_t k = 0; k < spec.size(); ++k)
    if (!in_band(k, spec.size())) spec[k] = 0.0;
  IqFrame f;
  f.samples = ifft(spec);
  const double p = mean_power(f.samples);
  for (auto& v : f.samples) v /= std::sqrt(p);
  f.label = Label::J;
  f.snr_db = std::numeric_limits<double>::quiet_NaN();
  return f;
}

Samples draw_channel_taps(const ChannelModel& model, Rng& rng) {
  const int n = model.n_taps;
  std::vector<double> delay_ns(static_cast<std::size_t>(n));
  std::vector<double> power(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    delay_ns[static_cast<std::size_t>(i)] = n > 1 ? model.max_delay_ns * i / (n - 1) : 0.0;
    power[static_cast<std::size_t>(i)] =
        model.rms_delay_ns > 0.0 ? std::exp(-delay_ns[static_cast<std::size_t>(i)] / model.rms_delay_ns) : (i == 0 ? 1.0 : 0.0);
  }
  double total = 0.0;
  for (double p : power) total += p;
  const double sample_ns = 1e9 / kSampleRate;
  const std::size_t max_lag = static_cast<std::size_t>(std::lround(model.max_delay_ns / sample_ns));
  Samples taps(max_lag + 1, cplx(0.0, 0.0));
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double k_lin = db_to_linear(model.rician_k_db);
  for (int i = 0; i < n; ++i) {
    const double p = power[static_cast<std::size_t>(i)] / total;
    cplx scatter(g(rng), g(rng));
    cplx gain;
    if (i == 0) {
      gain = std::sqrt(p) * (std::sqrt(k_lin / (k_lin + 1.0)) * std::polar(1.0, phase(rng)) +
                             std::sqrt(1.0 / (k_lin + 1.0)) * scatter);
    } else {
      gain = std::sqrt(p) * scatter;
    }
    taps[static_cast<std::size_t>(std::lround(delay_ns[static_cast<std::size_t>(i)] / sample_ns))] += gain;
  }
  return taps;
}

IqFrame apply_channel(const IqFrame& frame, const ChannelModel& model, Rng& rng) {
  const Samples taps = draw_channel_taps(model, rng);
  IqFrame out = frame;
  out.channel = model.id;
  const auto& x = frame.samples;
  for (std::size_t n = 0; n < x.size(); ++n) {
    cplx acc(0.0, 0.0);
    for (std::size_t d = 0; d < taps.size() && d <= n; ++d) acc += taps[d] * x[n - d];
    out.samples[n] = acc;
  }
  return out;
}

IqFrame add_awgn(const IqFrame& frame, double snr_db, Rng& rng) {
  if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_db must be finite");
  IqFrame out = frame;
  out.snr_db = snr_db;
  const double ps = mean_power(frame.samples);
  if (ps <= 0.0 || frame.samples.empty()) return out;
  std::normal_distribution<double> g(0.0, 1.0);
  Samples noise(frame.samples.size());
  for (auto& v : noise) v = cplx(g(rng), g(rng));
  const double target = ps / db_to_linear(snr_db);
  const double scale = std::sqrt(target / mean_power(noise));
  for (std::size_t i = 0; i < noise.size(); ++i) out.samples[i] += noise[i] * scale;
  return out;
}

Dataset make_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
  if (cfg.n_per_class < 1) throw std::invalid_argument("n_per_class must be >= 1");
  if (cfg.models.empty()) throw std::invalid_argument("at least one channel model required");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0,1)");
  require_frame_length(cfg.n_samples);
  Dataset ds;
  ds.n_samples = cfg.n_samples;
  const std::size_t total = 3 * cfg.n_per_class;
  ds.frames.reserve(total);
  const double jam_amp = std::pow(10.0, cfg.jammer_to_signal_db / 20.0);
  for (std::size_t i = 0; i < total; ++i) {
    const std::uint64_t fseed = derive_seed(seed, i);
    Rng rng(fseed);
    const auto label = static_cast<Label>(i % 3);
    const ChannelId model = cfg.models[(i / 3) % cfg.models.size()];
    std::uniform_real_distribution<double> snr_draw(cfg.snr_min_db, cfg.snr_max_db);
    IqFrame f;
    if (label == Label::I) {
      f = gen_noise(cfg.n_samples, rng);
    } else {
      if (label == Label::W) {
        std::uniform_int_distribution<int> mcs(0, 8);
        f = gen_wifi(mcs(rng), 0, cfg.grid, cfg.n_samples, rng);
      } else {
        f = gen_jammer(cfg.n_samples, rng);
        for (auto& v : f.samples) v *= jam_amp;
      }
      f = apply_channel(f, channel_model(model), rng);
      f = add_awgn(f, snr_draw(rng), rng);
    }
    f.channel = model;
    f.seed = fseed;
    ds.frames.push_back(std::move(f));
  }
  Rng split_rng(derive_seed(seed, ~0ULL));
  for (int c = 0; c < kNumLabels; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = static_cast<std::size_t>(c); i < total; i += 3) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), split_rng);
    const auto n_train = static_cast<std::size_t>(std::lround(cfg.train_fraction * static_cast<double>(idx.size())));
    ds.train.insert(ds.train.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
    ds.test.insert(ds.test.end(), idx.begin() + static_cast<long>(n_train), idx.end());
  }
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
  return ds;
}

void write_dataset(const Dataset& ds, std::ostream& out) {
  out.write("DWDS", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, ds.frames.size());
  put<std::uint64_t>(out, ds.n_samples);
  put<std::uint64_t>(out, ds.train.size());
  for (auto i : ds.train) put<std::uint64_t>(out, i);
  for (const auto& f : ds.frames) {
    if (f.samples.size() != ds.n_samples) throw std::invalid_argument("frame length differs from dataset length");
    put<std::int32_t>(out, static_cast<std::int32_t>(f.label));
    put<std::int32_t>(out, static_cast<std::int32_t>(f.channel));
    put<double>(out, f.snr_db);
    put<std::int32_t>(out, f.mcs_id);
    put<std::uint64_t>(out, f.seed);
    for (const auto& v : f.samples) {
      put<double>(out, v.real());
      put<double>(out, v.imag());
    }
  }
  if (!out) throw std::runtime_error("dataset write failed");
}

Dataset read_dataset(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DWDS", 4) != 0) throw std::runtime_error("not a DWDS dataset");
  if (get<std::uint32_t>(in) != 1) throw std::runtime_error("unsupported DWDS version");
  Dataset ds;
  const auto count = get<std::uint64_t>(in);
  ds.n_samples = get<std::uint64_t>(in);
  const auto n_train = get<std::uint64_t>(in);
  std::vector<bool> is_train(count, false);
  for (std::uint64_t i = 0; i < n_train; ++i) {
    const auto idx = get<std::uint64_t>(in);
    if (idx >= count) throw std::runtime_error("train index out of range");
    is_train[idx] = true;
    ds.train.push_back(idx);
  }
  for (std::uint64_t i = 0; i < count; ++i)
    if (!is_train[i]) ds.test.push_back(i);
  ds.frames.resize(count);
  for (auto& f : ds.frames) {
    f.label = static_cast<Label>(get<std::int32_t>(in));
    f.channel = static_cast<ChannelId>(get<std::int32_t>(in));
    f.snr_db = get<double>(in);
    f.mcs_id = get<std::int32_t>(in);
    f.seed = get<std::uint64_t>(in);
    f.samples.resize(ds.n_samples);
    for (auto& v : f.samples) {
      const double re = get<double>(in);
      v = cplx(re, get<double>(in));
    }
  }
  return ds;
}

void write_dataset_file(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_dataset(ds, out);
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_dataset(in);
}

}  // namespace deepwifi::waveform
