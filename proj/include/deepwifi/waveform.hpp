#pragma once

// Synthetic baseband frames: idle noise, simplified OFDM WiFi bursts and
// band-limited Gaussian jamming, plus tapped-delay-line channels and AWGN.

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace deepwifi::waveform {

using cplx = std::complex<double>;
using Samples = std::vector<cplx>;
using Rng = std::mt19937_64;
using Bits = std::vector<std::uint8_t>;

inline constexpr double kSampleRate = 40e6;
inline constexpr std::size_t kFftSize = 128;       // 64 subcarriers oversampled x2
inline constexpr std::size_t kStsPeriod = 64;
inline constexpr std::size_t kStsLength = 128;     // two periods
inline constexpr std::size_t kLtfCp = 32;
inline constexpr std::size_t kLtfLength = 128;
inline constexpr std::size_t kPreambleLength = kStsLength + kLtfCp + kLtfLength;
inline constexpr std::size_t kDefaultFrameLength = 2048;
inline constexpr double kSubcarrierSpacing = kSampleRate / kFftSize;

enum class Label : int { I = 0, W = 1, J = 2 };
inline constexpr int kNumLabels = 3;
char label_char(Label l);
Label label_from_char(char c);

enum class ChannelId : int { none = -1, A = 0, B, C, D, E, F };
std::string channel_name(ChannelId id);
ChannelId channel_from_name(const std::string& s);

struct ChannelModel {
  ChannelId id;
  double breakpoint_m;
  double rms_delay_ns;
  double max_delay_ns;
  double rician_k_db;
  int n_taps;
  int n_clusters;
};

/// Delay profiles A-F.
const std::array<ChannelModel, 6>& channel_models();
const ChannelModel& channel_model(ChannelId id);

enum class GuardInterval { long_800ns, short_400ns };

struct OfdmGrid {
  std::size_t fft_size = 64;
  std::size_t n_pilot = 8;
  std::size_t n_null = 16;
  std::size_t n_data = 40;
  GuardInterval guard = GuardInterval::long_800ns;

  /// Cyclic prefix length in samples at kSampleRate.
  std::size_t cp_length() const { return guard == GuardInterval::long_800ns ? 32 : 16; }
  std::size_t symbol_length() const { return kFftSize + cp_length(); }
};

/// Subcarrier indices (signed, relative to DC) of each bin class.
const std::vector<int>& data_subcarriers();
const std::vector<int>& pilot_subcarriers();
const std::vector<int>& null_subcarriers();
/// Data plus pilot subcarriers, ascending.
const std::vector<int>& occupied_subcarriers();

enum class Modulation { bpsk, qpsk, qam16, qam64, qam256 };
int bits_per_symbol(Modulation m);
std::string modulation_name(Modulation m);
/// Modulation column of the VHT MCS table; mcs_id in 0..8.
Modulation mcs_modulation(int mcs_id);

/// Unit average power, Gray-coded constellation indexed by the symbol's bit
/// pattern (first bit most significant).
const std::vector<cplx>& constellation(Modulation m);
std::vector<cplx> modulate(const Bits& bits, Modulation m);
Bits demodulate(const std::vector<cplx>& symbols, Modulation m);

struct IqFrame {
  Samples samples;
  Label label = Label::I;
  ChannelId channel = ChannelId::none;
  double snr_db = 0.0;  // NaN when no noise was added
  int mcs_id = -1;      // W frames only
  std::uint64_t seed = 0;
};

/// Idle channel: per-bin magnitude uniform in [-100, -80] dB, random phase.
IqFrame gen_noise(std::size_t n_samples, Rng& rng);

/// Number of OFDM data symbols that fit after the preamble.
std::size_t data_symbol_count(std::size_t n_samples, const OfdmGrid& grid);
/// Payload bits carried by a frame of this length at this MCS.
std::size_t frame_bit_capacity(int mcs_id, std::size_t n_samples, const OfdmGrid& grid);

/// Preamble + OFDM data symbols, unit mean power over the burst, zero tail.
/// payload_bytes == 0 fills the whole capacity with random bits; otherwise
/// the payload is followed by zero padding. Transmitted bits go to *bits_out.
IqFrame gen_wifi(int mcs_id, std::size_t payload_bytes, const OfdmGrid& grid, std::size_t n_samples,
                 Rng& rng, Bits* bits_out = nullptr);

/// Length in samples of the nonzero part of a WiFi frame.
std::size_t burst_length(std::size_t n_samples, const OfdmGrid& grid);

/// Recovers data bits from a time-aligned WiFi frame, equalizing each
/// subcarrier with the least-squares estimate from the long training field.
Bits demod_wifi(const Samples& samples, int mcs_id, const OfdmGrid& grid);

/// Known preamble (short + long training fields) at the same scale as gen_wifi.
const Samples& preamble();
/// One period of the long training symbol without its cyclic prefix.
Samples long_training_symbol();

/// White complex Gaussian, masked to the occupied band, unit variance.
IqFrame gen_jammer(std::size_t n_samples, Rng& rng);

/// Tapped delay line for one channel draw; index = delay in samples.
Samples draw_channel_taps(const ChannelModel& model, Rng& rng);
IqFrame apply_channel(const IqFrame& frame, const ChannelModel& model, Rng& rng);

/// Adds complex AWGN scaled so the measured SNR over the frame equals snr_db.
IqFrame add_awgn(const IqFrame& frame, double snr_db, Rng& rng);

double mean_power(const Samples& s);
/// Fraction of energy inside |f| <= max occupied subcarrier + half a bin.
double in_band_fraction(const Samples& s);

Samples fft(const Samples& x);
Samples ifft(const Samples& x);

struct DatasetConfig {
  std::size_t n_per_class = 400;
  std::size_t n_samples = kDefaultFrameLength;
  std::vector<ChannelId> models = {ChannelId::A, ChannelId::B, ChannelId::C,
                                   ChannelId::D, ChannelId::E, ChannelId::F};
  double snr_min_db = 5.0;
  double snr_max_db = 25.0;
  double jammer_to_signal_db = 0.0;
  double train_fraction = 0.8;
  OfdmGrid grid;
};

struct Dataset {
  std::vector<IqFrame> frames;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::size_t n_samples = 0;
};

/// Frame i has class i mod 3 and channel model (i / 3) mod |models|; idle
/// frames carry the model tag but see no channel or added noise.
Dataset make_dataset(const DatasetConfig& cfg, std::uint64_t seed);

/// Binary dataset file; see docs/formats.md ("DWDS").
void write_dataset(const Dataset& ds, std::ostream& out);
Dataset read_dataset(std::istream& in);
void write_dataset_file(const Dataset& ds, const std::string& path);
Dataset read_dataset_file(const std::string& path);

}  // namespace deepwifi::waveform
