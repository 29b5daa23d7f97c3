#pragma once

// Backpressure routing, per-flow FCFS queues, traffic generation and the
// slotted multi-channel network simulator.

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <string>
#include <vector>

#include "deepwifi/classifier.hpp"
#include "deepwifi/jammer.hpp"
#include "deepwifi/mac.hpp"
#include "deepwifi/nn.hpp"
#include "deepwifi/waveform.hpp"

namespace deepwifi::net {

using Rng = nn::Rng;
using waveform::Label;

/// One 802.11ac frame.
inline constexpr double kSlotSeconds = 5.484e-3;

struct Flow {
  int id = 0;
  int source = 0;
  int dest = 0;
  double rate_kbps = 500.0;  // mean; per-slot rate is uniform on [0, 2 * mean]

  void validate(int n_users) const;
};

/// Bits arriving per flow in one slot.
std::vector<std::uint64_t> gen_traffic(const std::vector<Flow>& flows, double slot_seconds, Rng& rng);

struct Segment {
  std::uint64_t seq = 0;    // per-flow, assigned at the source
  std::uint64_t bits = 0;
  std::uint64_t stamp = 0;  // enqueue order at the current hop
};

class FlowQueue {
 public:
  void push(std::uint64_t seq, std::uint64_t bits);
  /// Removes up to `bits` from the head, splitting the last segment if needed.
  std::vector<Segment> pop(std::uint64_t bits);
  std::uint64_t backlog() const { return backlog_; }
  bool empty() const { return backlog_ == 0; }
  const std::deque<Segment>& segments() const { return q_; }

 private:
  std::deque<Segment> q_;
  std::uint64_t backlog_ = 0;
  std::uint64_t next_stamp_ = 0;
};

struct BackpressureChoice {
  int flow = -1;
  int neighbor = -1;  // index into the neighbor list passed in
  double utility = 0.0;

  bool none() const { return flow < 0; }
};

/// q_self[s] = own backlog of flow s, q_nbr[j][s] = neighbor j's backlog,
/// rates[j] = link rate to neighbor j. Maximizes rate * (Q_i - Q_j)^+ over
/// (flow, neighbor) pairs; ties go to the lower flow, then the lower
/// neighbor. NONE when the best utility is not positive.
BackpressureChoice backpressure_select(const std::vector<double>& q_self,
                                       const std::vector<std::vector<double>>& q_nbr,
                                       const std::vector<double>& rates);

struct Topology {
  std::vector<std::array<double, 2>> positions;
  std::vector<std::vector<int>> neighbors;  // sorted

  std::size_t size() const { return positions.size(); }
  bool linked(int a, int b) const;
  bool connected() const;
  void validate() const;

  /// Uniform placement in a square; links within `range`. Redrawn until the
  /// graph is connected.
  static Topology random(int n_users, double area, double range, Rng& rng);
  static Topology from_links(int n_users, const std::vector<std::pair<int, int>>& links);
};

enum class Policy { deepwifi, baseline };
std::string policy_name(Policy p);
Policy policy_from_name(const std::string& s);

/// How a DeepWiFi user tells WiFi from jamming on a busy channel. Idle vs
/// busy comes from energy detection and is always right; a busy channel the
/// classifier calls idle is taken as WiFi. Baseline users only sense energy.
enum class LabelMode { truth, confusion, bank };
std::string label_mode_name(LabelMode m);
LabelMode label_mode_from_name(const std::string& s);

/// Classifier outputs on a fixed set of generated frames, grouped by true
/// class; a sensing event draws one of them.
struct FrameBank {
  std::array<std::vector<Label>, waveform::kNumLabels> predicted;

  nn::Matrix confusion() const;  // rows = true label, each row sums to 1
  void save_csv(const std::string& path) const;
  static FrameBank load_csv(const std::string& path);
};

FrameBank build_frame_bank(const classifier::Pipeline& pipeline, const waveform::DatasetConfig& cfg,
                           std::uint64_t seed);

struct ScenarioConfig {
  int users = 9;
  int channels = 40;
  int flows = 5;
  double flow_rate_kbps = 500.0;
  std::size_t slots = 2000;
  std::uint64_t seed = 1;
  Policy policy = Policy::deepwifi;
  bool lpi = false;

  jammer::JammerParams jammer;  // tau0 in linear received-power units
  double snr_db = 20.0;         // link SNR without jamming
  double sinr_db = 0.0;         // receiver SINR under jamming at full power
  double sinr_spread_db = 3.0;  // per-slot uniform variation of both

  double p_max_db = 10.0;
  double p_min_db = -30.0;
  double area = 100.0;
  double range = 60.0;
  int payload_bytes = 1024;
  waveform::GuardInterval guard = waveform::GuardInterval::long_800ns;
  double overhead_fraction = 0.0;  // frame share spent on queue exchange

  LabelMode labels = LabelMode::truth;
  nn::Matrix confusion = nn::Matrix::Identity(3, 3);  // used in confusion mode
  std::string bank_path;                              // used by the CLI in bank mode

  bool check_invariants = false;

  void validate() const;
};

/// `key = value` settings; unknown keys and bad values throw
/// std::invalid_argument.
void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value);
ScenarioConfig parse_scenario(std::istream& in, ScenarioConfig base = {});
ScenarioConfig load_scenario(const std::string& path, ScenarioConfig base = {});
/// Canonical `key = value` text; parse_scenario(dump) reproduces the config.
std::string dump_scenario(const ScenarioConfig& cfg);
/// 100 s of simulated time with the default network.
ScenarioConfig paper_preset();

struct Transmission {
  int src = -1;
  int dst = -1;
  int channel = -1;
  int flow = -1;
  int mcs_id = 0;
  std::uint64_t bits = 0;      // payload bits taken from the queue
  std::uint64_t capacity = 0;  // frame bits, the rest is padding
  double power = 0.0;
  double sinr_db = 0.0;  // at decision time, full power
  bool degraded = false;
  bool jammed = false;   // jammer on by the end of the slot
  bool collided = false;
  bool success = false;
};

struct SlotMetrics {
  std::uint64_t slot = 0;
  std::uint64_t arrivals_bits = 0;
  std::uint64_t delivered_bits = 0;
  std::uint64_t backlog_bits = 0;
  int transmissions = 0;
  int successes = 0;
  int collisions = 0;
  int jammed_channels = 0;
  double cumulative_mbps = 0.0;  // delivered so far / elapsed
};

struct RunResult {
  std::vector<SlotMetrics> slots;
  std::vector<double> user_tx_mbps;         // successfully sent bits per user
  std::vector<double> user_delivered_mbps;  // end-to-end, by flow source
  std::vector<double> tx_power_db;          // one entry per transmission
  std::uint64_t offered_bits = 0;
  std::uint64_t delivered_bits = 0;
  std::uint64_t padding_bits = 0;
  double cumulative_mbps = 0.0;
  double tau_db = 0.0;  // sensing threshold, for power histograms
};

class Engine {
 public:
  Engine(const ScenarioConfig& cfg, const mac::McsTable& table, const FrameBank* bank = nullptr);

  SlotMetrics step();
  RunResult run();

  const ScenarioConfig& config() const { return cfg_; }
  const Topology& topology() const { return topo_; }
  const std::vector<Flow>& flows() const { return flows_; }
  std::uint64_t backlog(int user, int flow) const;
  const FlowQueue& queue(int user, int flow) const;
  const std::vector<Transmission>& last_transmissions() const { return last_tx_; }
  const std::vector<jammer::Jammer>& jammers() const { return jammers_; }
  std::uint64_t slot() const { return slot_; }

  void set_jammer_tracing(bool on);

  /// Replaces the random topology and flows, e.g. for hand-built cases.
  void set_network(const Topology& topo, const std::vector<Flow>& flows);

 private:
  Label observe(Label truth, int user, int channel);
  std::uint64_t frame_bits(double rate_mbps) const;

  ScenarioConfig cfg_;
  const mac::McsTable& table_;
  const FrameBank* bank_;
  Topology topo_;
  std::vector<Flow> flows_;
  std::vector<std::vector<FlowQueue>> queues_;  // [user][flow]
  std::vector<std::uint64_t> next_seq_;
  std::vector<jammer::Jammer> jammers_;
  std::vector<mac::BackoffState> backoff_;
  std::vector<std::uint64_t> mac_key_;
  Rng traffic_rng_, jam_rng_, sinr_rng_, order_rng_;
  std::uint64_t label_key_;
  std::uint64_t slot_ = 0;
  std::vector<Transmission> last_tx_;

  RunResult acc_;
  std::vector<std::uint64_t> user_tx_bits_, user_delivered_bits_;
};

RunResult run_scenario(const ScenarioConfig& cfg, const mac::McsTable& table, const FrameBank* bank = nullptr);

void save_slots_csv(const RunResult& r, const std::string& path);
void save_users_csv(const RunResult& r, const std::string& path);
void save_powers_csv(const RunResult& r, const std::string& path);
void save_summary_csv(const ScenarioConfig& cfg, const RunResult& r, const std::string& path);

enum class SweepAxis { p_jam, sinr_db, tau_db };
std::string axis_name(SweepAxis a);
SweepAxis axis_from_name(const std::string& s);

struct SweepRow {
  Policy policy;
  double value;
  std::uint64_t seed;
  double cumulative_mbps;
  double offered_mbps;
};

struct SweepConfig {
  ScenarioConfig base;
  SweepAxis axis = SweepAxis::p_jam;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<Policy> policies = {Policy::deepwifi, Policy::baseline};
  std::size_t threads = 0;  // 0 = one per hardware thread
};

/// Grid 0, 0.05, ..., 1.
std::vector<double> p_jam_grid();

void set_axis(ScenarioConfig& cfg, SweepAxis axis, double value);
/// One row per (policy, value, seed), in that nesting order. Runs are
/// independent and spread over worker threads.
std::vector<SweepRow> run_sweep(const SweepConfig& sc, const mac::McsTable& table, const FrameBank* bank = nullptr);
void save_sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis, const std::string& path);
/// Mean over seeds of one policy, in grid order.
std::vector<double> sweep_mean(const std::vector<SweepRow>& rows, Policy policy, const std::vector<double>& values);

}  // namespace deepwifi::net
