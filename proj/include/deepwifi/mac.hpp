#pragma once

// Channel access (scan, exponential backoff, degraded mode on jammed
// channels), baseline WiFi access, LPI/LPD power control and MCS adaptation.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deepwifi/nn.hpp"
#include "deepwifi/waveform.hpp"

namespace deepwifi::mac {

using Rng = nn::Rng;
using waveform::GuardInterval;
using waveform::Label;

struct ChannelObs {
  Label label = Label::I;
  double sinr_db = 0.0;
  bool authenticated = true;  // meaningful for W only
};
using ChannelView = std::vector<ChannelObs>;

inline constexpr int kBackoffK0 = 4;
inline constexpr int kBackoffKMax = 10;

struct BackoffState {
  std::vector<int> counter;
  std::vector<int> k;
  std::vector<bool> active;

  explicit BackoffState(std::size_t channels = 0);
  std::size_t size() const { return counter.size(); }
};

struct Action {
  enum Kind { transmit, wait } kind = wait;
  int channel = -1;
  bool degraded = false;  // transmitting on a jammed channel

  static Action tx(int ch, bool degraded = false) { return {transmit, ch, degraded}; }
};

/// Label used for access decisions: an unauthenticated WiFi signal is
/// handled like a jammer.
Label effective_label(const ChannelObs& obs);

/// Circular scan from a random start: first idle channel wins; jammed
/// channels are candidates (best SINR, ties to lower index); all-WiFi waits
/// on the backoff counters.
Action deepwifi_scan(const ChannelView& view, BackoffState& backoff, Rng& rng);
/// Same scan with jammed channels treated as WiFi.
Action baseline_scan(const ChannelView& view, BackoffState& backoff, Rng& rng);

struct McsEntry {
  int mcs_id;
  waveform::Modulation modulation;
  double code_rate;
  const char* coding;
  double rate_800ns;
  double rate_400ns;

  double rate(GuardInterval g) const { return g == GuardInterval::long_800ns ? rate_800ns : rate_400ns; }
};

inline constexpr int kNumMcs = 9;
const std::array<McsEntry, kNumMcs>& mcs_entries();
double mcs_rate(int mcs_id, GuardInterval g);

struct McsTableConfig {
  std::vector<int> payloads = {256, 512, 1024};
  double sinr_lo_db = -5.0;
  double sinr_hi_db = 40.0;
  double step_db = 0.25;
  std::size_t trials = 200;
  std::size_t codeword_bits = 648;
  double correctable_fraction = 0.25;  // of the parity bits
  std::uint64_t seed = 8;
};

/// Bit errors a codeword of rate r survives.
std::size_t correctable_bits(double code_rate, const McsTableConfig& cfg);

/// Zero-packet-error lower SINR edge per payload class and MCS.
struct McsTable {
  std::vector<int> payloads;
  std::vector<std::array<double, kNumMcs>> edges_db;  // +inf if unreachable on the grid

  /// Row of the payload class nearest to `payload_bytes`.
  const std::array<double, kNumMcs>& for_payload(int payload_bytes) const;
  void save_csv(const std::string& path) const;
  static McsTable load_csv(const std::string& path);
};

/// Monte Carlo: 200 frames of random payload per (payload, MCS), uncoded
/// hard-decision symbols through AWGN, packet lost if any codeword has more
/// bit errors than it can correct. The edge is the lowest grid SINR at which
/// every trial decodes (bisection over the grid with common random numbers).
/// Edges are made nondecreasing in MCS.
McsTable build_mcs_table(const McsTableConfig& cfg = {});

/// True if one packet of this MCS and payload decodes at this SINR; the
/// same error model as build_mcs_table for a single draw.
bool packet_decodes(int mcs_id, int payload_bytes, double sinr_db, Rng& rng, const McsTableConfig& cfg = {});

/// Default table, built once per process.
const McsTable& default_mcs_table();

struct McsChoice {
  int mcs_id = 0;
  double rate_mbps = 0.0;
  bool decodable = false;  // sinr at or above the MCS 0 edge
};

McsChoice mcs_select(double sinr_db, int payload_bytes, GuardInterval guard, const McsTable& table);
/// Rate actually delivered: the selected rate, or 0 below the MCS 0 edge.
double link_rate(double sinr_db, int payload_bytes, GuardInterval guard, const McsTable& table);

struct LinkState {
  double gain = 1.0;          // linear power gain to the intended receiver
  double noise = 1.0;         // noise power at the receiver
  double interference = 0.0;  // e.g. jamming power at the receiver
};

struct PowerChoice {
  double power = 0.0;
  bool degraded = false;  // requirement not reachable at p_max
};

/// Minimum power meeting the SINR requirement, clamped to [p_min, p_max].
PowerChoice lpi_power(double required_sinr_db, const LinkState& link, double p_max, double p_min = 1e-9);

}  // namespace deepwifi::mac
