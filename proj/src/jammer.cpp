#include "deepwifi/jammer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace deepwifi::jammer {

std::string kind_name(JammerKind k) {
  switch (k) {
    case JammerKind::random: return "random";
    case JammerKind::static_sensing: return "sensing";
    case JammerKind::adaptive: return "adaptive";
  }
  return "?";
}

JammerKind kind_from_name(const std::string& s) {
  if (s == "random") return JammerKind::random;
  if (s == "sensing" || s == "static_sensing") return JammerKind::static_sensing;
  if (s == "adaptive") return JammerKind::adaptive;
  throw std::invalid_argument("unknown jammer kind: " + s);
}

void JammerParams::validate() const {
  if (!(p_jam >= 0.0 && p_jam <= 1.0)) throw std::invalid_argument("p_jam must be in [0, 1]");
  if (!(tau0 >= 0.0)) throw std::invalid_argument("tau must be >= 0");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  if (!(power >= 0.0) || !(gain >= 0.0) || !(w >= 0.0)) throw std::invalid_argument("power, gain and w must be >= 0");
}

JamDecision random_step(const JammerParams& p, Rng& rng) {
  std::bernoulli_distribution coin(p.p_jam);
  const bool on = coin(rng);
  return {on, on ? p.power : 0.0};
}

JamDecision sensing_step(const JammerParams& p, double tau, double r, Rng& rng) {
  if (r >= tau) return {true, p.power};
  return random_step(p, rng);
}

double adaptive_utility(const std::vector<double>& r, const std::vector<double>& p, const std::vector<double>& tau,
                        double w) {
  if (r.size() != p.size() || r.size() != tau.size()) throw std::invalid_argument("utility window length mismatch");
  if (r.empty()) throw std::invalid_argument("empty utility window");
  double g = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) g += (r[k] >= tau[k] ? 1.0 : 0.0) + w * p[k];
  return g / static_cast<double>(r.size());
}

double adaptive_update(double tau, double g_prev, double g_cur, double delta, std::size_t t) {
  if (t < 1) throw std::invalid_argument("update step must be >= 1");
  const double step = delta / static_cast<double>(t);
  if (g_prev > g_cur) return tau + step;
  return std::max(0.0, tau - step);
}

Jammer::Jammer(const JammerParams& params, int channel)
    : params_(params),
      channel_(channel),
      tau_(params.tau0),
      g_prev_(std::numeric_limits<double>::quiet_NaN()),
      g_cur_(std::numeric_limits<double>::quiet_NaN()) {
  params_.validate();
}

JamDecision Jammer::step(double received_power, Rng& rng) {
  draw(rng);
  return resolve(received_power);
}

bool Jammer::draw(Rng& rng) {
  coin_ = random_step(params_, rng).on;
  return coin_;
}

JamDecision Jammer::resolve(double received_power) {
  const double r = received_power * params_.gain;
  bool on = coin_;
  if (params_.kind != JammerKind::random && r >= tau_) on = true;
  const JamDecision d{on, on ? params_.power : 0.0};
  const double tau_used = tau_;
  if (params_.kind == JammerKind::adaptive) {
    win_r_.push_back(r);
    win_p_.push_back(d.power);
    win_tau_.push_back(tau_);
    if (win_r_.size() == params_.window) {
      g_prev_ = g_cur_;
      g_cur_ = adaptive_utility(win_r_, win_p_, win_tau_, params_.w);
      ++t_;
      // the first window has nothing to compare against
      if (t_ >= 2) tau_ = adaptive_update(tau_, g_prev_, g_cur_, params_.delta, t_);
      win_r_.clear();
      win_p_.clear();
      win_tau_.clear();
    }
  }
  if (tracing_) trace_.push_back({slot_, channel_, d.on, tau_used, g_cur_});
  ++slot_;
  coin_ = false;
  return d;
}

void save_trace_csv(const std::vector<TraceRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# deepwifi-csv jammer_trace v1\n";
  out << "slot,channel,on,tau,g\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.slot << ',' << r.channel << ',' << (r.on ? 1 : 0) << ',' << r.tau << ',';
    if (!std::isnan(r.g)) out << r.g;
    out << '\n';
  }
}

}  // namespace deepwifi::jammer
