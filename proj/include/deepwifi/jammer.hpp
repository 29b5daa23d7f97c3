#pragma once

// Probabilistic, sensing and adaptive-threshold jammers. One jammer owns one
// channel and is stepped once per slot.

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "deepwifi/nn.hpp"

namespace deepwifi::jammer {

using Rng = nn::Rng;

enum class JammerKind { random, static_sensing, adaptive };
std::string kind_name(JammerKind k);
JammerKind kind_from_name(const std::string& s);

struct JammerParams {
  JammerKind kind = JammerKind::random;
  double p_jam = 0.5;
  double tau0 = 1.0;       // sensing threshold, received-power units
  double power = 1.0;      // transmit power when on
  std::size_t window = 1;  // T0
  double w = 1.0;          // power weight in the utility
  double delta = 0.5;
  double gain = 1.0;       // user -> jammer power gain

  void validate() const;
};

struct JamDecision {
  bool on = false;
  double power = 0.0;
};

/// On with probability p_jam.
JamDecision random_step(const JammerParams& p, Rng& rng);
/// On if r >= tau; otherwise on with probability p_jam.
JamDecision sensing_step(const JammerParams& p, double tau, double received_power, Rng& rng);

/// (1/T0) sum_k [1(r_k >= tau_k) + w p_k] over one window.
double adaptive_utility(const std::vector<double>& r, const std::vector<double>& p, const std::vector<double>& tau,
                        double w);

/// tau + delta/t if g_prev > g_cur, else max(0, tau - delta/t).
double adaptive_update(double tau, double g_prev, double g_cur, double delta, std::size_t t);

struct TraceRow {
  std::uint64_t slot;
  int channel;
  bool on;
  double tau;
  double g;  // NaN until the first window closes
};

class Jammer {
 public:
  Jammer(const JammerParams& params, int channel);

  /// received_power is the summed user power on the channel before the gain.
  JamDecision step(double received_power, Rng& rng);

  /// Two-phase form of step for a slot: draw() fixes the probabilistic part,
  /// which users can sense; resolve() adds the reaction to what was sent.
  bool draw(Rng& rng);
  JamDecision resolve(double received_power);
  bool drawn_on() const { return coin_; }

  int channel() const { return channel_; }
  double tau() const { return tau_; }
  std::size_t updates() const { return t_; }
  double last_utility() const { return g_cur_; }
  const JammerParams& params() const { return params_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  void set_tracing(bool on) { tracing_ = on; }

 private:
  JammerParams params_;
  int channel_;
  double tau_;
  std::size_t t_ = 0;  // closed windows
  std::uint64_t slot_ = 0;
  bool coin_ = false;
  double g_prev_;
  double g_cur_;
  std::vector<double> win_r_, win_p_, win_tau_;
  bool tracing_ = false;
  std::vector<TraceRow> trace_;
};

void save_trace_csv(const std::vector<TraceRow>& rows, const std::string& path);

}  // namespace deepwifi::jammer
