#include "deepwifi/mac.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "deepwifi/util.hpp"

namespace deepwifi::mac {

using waveform::Modulation;

namespace {

int window_max(int k) { return (1 << k) - 1; }

Action scan(const ChannelView& view, BackoffState& bo, Rng& rng, bool jam_is_wifi) {
  const std::size_t m = view.size();
  if (m == 0) throw std::invalid_argument("empty channel view");
  if (bo.size() != m) throw std::invalid_argument("backoff state size mismatch");
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  const std::size_t start = pick(rng);
  int best = -1;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = (start + i) % m;
    Label l = effective_label(view[c]);
    if (jam_is_wifi && l == Label::J) l = Label::W;
    if (l == Label::I) {
      bo.active[c] = false;
      bo.counter[c] = 0;
      bo.k[c] = kBackoffK0;
      return Action::tx(static_cast<int>(c));
    }
    if (l == Label::W) {
      if (!bo.active[c]) {
        bo.active[c] = true;
        bo.counter[c] = window_max(bo.k[c]);
      }
      continue;
    }
    const int ci = static_cast<int>(c);
    if (best < 0 || view[c].sinr_db > view[static_cast<std::size_t>(best)].sinr_db ||
        (view[c].sinr_db == view[static_cast<std::size_t>(best)].sinr_db && ci < best))
      best = ci;
  }
  if (best >= 0) return Action::tx(best, true);

  for (std::size_t c = 0; c < m; ++c) {
    if (!bo.active[c]) continue;
    if (bo.counter[c] == 0) {
      // re-sense: still busy, so draw a new counter from the doubled window
      std::uniform_int_distribution<int> draw(0, window_max(bo.k[c] + 1));
      bo.counter[c] = draw(rng);
      bo.k[c] = std::min(bo.k[c] + 1, kBackoffKMax);
    } else {
      --bo.counter[c];
    }
  }
  return Action{};
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  return std::stod(s);
}

}  // namespace

BackoffState::BackoffState(std::size_t channels)
    : counter(channels, 0), k(channels, kBackoffK0), active(channels, false) {}

Label effective_label(const ChannelObs& obs) {
  if (obs.label == Label::W && !obs.authenticated) return Label::J;
  return obs.label;
}

Action deepwifi_scan(const ChannelView& view, BackoffState& backoff, Rng& rng) {
  return scan(view, backoff, rng, false);
}

Action baseline_scan(const ChannelView& view, BackoffState& backoff, Rng& rng) {
  return scan(view, backoff, rng, true);
}

const std::array<McsEntry, kNumMcs>& mcs_entries() {
  static const std::array<McsEntry, kNumMcs> t = {{
      {0, Modulation::bpsk, 1.0 / 2, "1/2", 6.5, 7.2},
      {1, Modulation::qpsk, 1.0 / 2, "1/2", 13.0, 14.4},
      {2, Modulation::qpsk, 3.0 / 4, "3/4", 19.5, 21.7},
      {3, Modulation::qam16, 1.0 / 2, "1/2", 26.0, 28.9},
      {4, Modulation::qam16, 3.0 / 4, "3/4", 39.0, 43.3},
      {5, Modulation::qam64, 2.0 / 3, "2/3", 52.0, 57.8},
      {6, Modulation::qam64, 3.0 / 4, "3/4", 58.5, 65.0},
      {7, Modulation::qam64, 5.0 / 6, "5/6", 65.0, 72.2},
      {8, Modulation::qam256, 3.0 / 4, "3/4", 78.0, 86.7},
  }};
  return t;
}

double mcs_rate(int mcs_id, GuardInterval g) {
  if (mcs_id < 0 || mcs_id >= kNumMcs) throw std::invalid_argument("mcs_id out of range");
  return mcs_entries()[static_cast<std::size_t>(mcs_id)].rate(g);
}

std::size_t correctable_bits(double code_rate, const McsTableConfig& cfg) {
  return static_cast<std::size_t>(
      std::lround(static_cast<double>(cfg.codeword_bits) * (1.0 - code_rate) * cfg.correctable_fraction));
}

namespace {

// One frame's coded bits, symbols and unit-variance noise.
struct Trial {
  waveform::Bits bits;
  std::vector<waveform::cplx> symbols;
  std::vector<waveform::cplx> noise;
};

Trial make_trial(const McsEntry& e, int payload_bytes, Rng& rng) {
  const auto n_coded = static_cast<std::size_t>(std::ceil(payload_bytes * 8.0 / e.code_rate));
  const auto bps = static_cast<std::size_t>(waveform::bits_per_symbol(e.modulation));
  const std::size_t n_sym = (n_coded + bps - 1) / bps;
  Trial t;
  std::bernoulli_distribution coin(0.5);
  t.bits.resize(n_sym * bps);
  for (auto& b : t.bits) b = coin(rng) ? 1 : 0;
  t.symbols = waveform::modulate(t.bits, e.modulation);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  t.noise.resize(n_sym);
  for (auto& n : t.noise) n = waveform::cplx(g(rng), g(rng));
  t.bits.resize(n_coded);
  return t;
}

bool decodes(const Trial& t, const McsEntry& e, double sinr_db, const McsTableConfig& cfg) {
  const double sigma = std::sqrt(1.0 / db_to_linear(sinr_db));
  std::vector<waveform::cplx> rx(t.symbols.size());
  for (std::size_t i = 0; i < rx.size(); ++i) rx[i] = t.symbols[i] + sigma * t.noise[i];
  const waveform::Bits hat = waveform::demodulate(rx, e.modulation);
  const std::size_t limit = correctable_bits(e.code_rate, cfg);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < t.bits.size(); ++i) {
    if (i % cfg.codeword_bits == 0) errors = 0;
    errors += hat[i] != t.bits[i];
    if (errors > limit) return false;
  }
  return true;
}

}  // namespace

bool packet_decodes(int mcs_id, int payload_bytes, double sinr_db, Rng& rng, const McsTableConfig& cfg) {
  if (mcs_id < 0 || mcs_id >= kNumMcs) throw std::invalid_argument("mcs_id out of range");
  const auto& e = mcs_entries()[static_cast<std::size_t>(mcs_id)];
  return decodes(make_trial(e, payload_bytes, rng), e, sinr_db, cfg);
}

McsTable build_mcs_table(const McsTableConfig& cfg) {
  if (cfg.payloads.empty() || cfg.trials == 0 || !(cfg.step_db > 0.0) || !(cfg.sinr_hi_db > cfg.sinr_lo_db) ||
      cfg.codeword_bits == 0)
    throw std::invalid_argument("bad MCS table configuration");
  const auto n_grid = static_cast<long>(std::floor((cfg.sinr_hi_db - cfg.sinr_lo_db) / cfg.step_db + 1e-9)) + 1;
  const auto grid = [&](long i) { return cfg.sinr_lo_db + cfg.step_db * static_cast<double>(i); };
  McsTable table;
  table.payloads = cfg.payloads;
  std::sort(table.payloads.begin(), table.payloads.end());
  if (table.payloads.front() <= 0) throw std::invalid_argument("payload must be positive");
  const int largest = table.payloads.back();
  table.edges_db.assign(table.payloads.size(), {});

  for (int m = 0; m < kNumMcs; ++m) {
    const auto& e = mcs_entries()[static_cast<std::size_t>(m)];
    const auto bps = static_cast<std::size_t>(waveform::bits_per_symbol(e.modulation));
    const std::size_t limit = correctable_bits(e.code_rate, cfg);
    // codeword bit ranges of every payload class; smaller classes are prefixes
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> ranges(table.payloads.size());
    for (std::size_t p = 0; p < table.payloads.size(); ++p) {
      const auto n_coded = static_cast<std::size_t>(std::ceil(table.payloads[p] * 8.0 / e.code_rate));
      for (std::size_t b = 0; b < n_coded; b += cfg.codeword_bits)
        ranges[p].push_back({b, std::min(b + cfg.codeword_bits, n_coded)});
    }
    std::vector<long> worst(table.payloads.size(), -1);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(m) * 1000003ULL + t));
      const Trial tr = make_trial(e, largest, rng);
      const auto passes = [&](std::pair<std::size_t, std::size_t> r, long gi) {
        const std::size_t s0 = r.first / bps, s1 = (r.second + bps - 1) / bps;
        const double sigma = std::sqrt(1.0 / db_to_linear(grid(gi)));
        std::vector<waveform::cplx> rx(s1 - s0);
        for (std::size_t i = s0; i < s1; ++i) rx[i - s0] = tr.symbols[i] + sigma * tr.noise[i];
        const waveform::Bits hat = waveform::demodulate(rx, e.modulation);
        std::size_t errors = 0;
        for (std::size_t b = r.first; b < r.second; ++b) errors += hat[b - s0 * bps] != tr.bits[b];
        return errors <= limit;
      };
      // lowest passing grid index per codeword, assuming errors only shrink with SINR
      const auto critical = [&](std::pair<std::size_t, std::size_t> r) -> long {
        if (!passes(r, n_grid - 1)) return n_grid;
        long lo = -1, hi = n_grid - 1;
        while (hi - lo > 1) {
          const long mid = (lo + hi) / 2;
          (passes(r, mid) ? hi : lo) = mid;
        }
        return hi;
      };
      std::map<std::pair<std::size_t, std::size_t>, long> seen;
      for (std::size_t p = 0; p < table.payloads.size(); ++p)
        for (const auto& r : ranges[p]) {
          auto it = seen.find(r);
          if (it == seen.end()) it = seen.emplace(r, critical(r)).first;
          worst[p] = std::max(worst[p], it->second);
        }
    }
    for (std::size_t p = 0; p < table.payloads.size(); ++p)
      table.edges_db[p][static_cast<std::size_t>(m)] =
          worst[p] >= n_grid ? std::numeric_limits<double>::infinity() : grid(std::max<long>(worst[p], 0));
  }
  for (auto& row : table.edges_db)
    for (int m = 1; m < kNumMcs; ++m)
      row[static_cast<std::size_t>(m)] = std::max(row[static_cast<std::size_t>(m)], row[static_cast<std::size_t>(m - 1)]);
  return table;
}

const std::array<double, kNumMcs>& McsTable::for_payload(int payload_bytes) const {
  if (payloads.empty()) throw std::invalid_argument("empty MCS table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < payloads.size(); ++i)
    if (std::abs(payloads[i] - payload_bytes) < std::abs(payloads[best] - payload_bytes)) best = i;
  return edges_db[best];
}

void McsTable::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# deepwifi-csv mcs_table v1\n";
  out << "payload,sinr_db_low_edge,mcs_id\n";
  out.precision(10);
  for (std::size_t p = 0; p < payloads.size(); ++p)
    for (int m = 0; m < kNumMcs; ++m) {
      const double e = edges_db[p][static_cast<std::size_t>(m)];
      out << payloads[p] << ',';
      if (std::isinf(e))
        out << "inf";
      else
        out << e;
      out << ',' << m << '\n';
    }
}

McsTable McsTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  McsTable t;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "payload,sinr_db_low_edge,mcs_id") throw std::runtime_error("bad MCS table header in " + path);
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw std::runtime_error("bad MCS table row: " + line);
    const int payload = std::stoi(a);
    const int m = std::stoi(c);
    if (m < 0 || m >= kNumMcs) throw std::runtime_error("bad mcs id in MCS table: " + line);
    auto it = std::find(t.payloads.begin(), t.payloads.end(), payload);
    if (it == t.payloads.end()) {
      t.payloads.push_back(payload);
      std::array<double, kNumMcs> row;
      row.fill(std::numeric_limits<double>::infinity());
      t.edges_db.push_back(row);
      it = t.payloads.end() - 1;
    }
    t.edges_db[static_cast<std::size_t>(it - t.payloads.begin())][static_cast<std::size_t>(m)] = parse_double(b);
  }
  if (t.payloads.empty()) throw std::runtime_error("empty MCS table in " + path);
  return t;
}

const McsTable& default_mcs_table() {
  static const McsTable t = build_mcs_table();
  return t;
}

McsChoice mcs_select(double sinr_db, int payload_bytes, GuardInterval guard, const McsTable& table) {
  const auto& row = table.for_payload(payload_bytes);
  McsChoice c;
  for (int m = kNumMcs - 1; m >= 0; --m)
    if (sinr_db >= row[static_cast<std::size_t>(m)]) {
      c.mcs_id = m;
      c.decodable = true;
      break;
    }
  c.rate_mbps = mcs_rate(c.mcs_id, guard);
  return c;
}

double link_rate(double sinr_db, int payload_bytes, GuardInterval guard, const McsTable& table) {
  const McsChoice c = mcs_select(sinr_db, payload_bytes, guard, table);
  return c.decodable ? c.rate_mbps : 0.0;
}

PowerChoice lpi_power(double required_sinr_db, const LinkState& link, double p_max, double p_min) {
  if (!(link.gain > 0.0)) throw std::invalid_argument("link gain must be positive");
  if (!(p_max > 0.0) || p_min < 0.0 || p_min > p_max) throw std::invalid_argument("bad power limits");
  const double need = db_to_linear(required_sinr_db) * (link.noise + link.interference) / link.gain;
  if (need > p_max) return {p_max, true};
  return {std::max(need, p_min), false};
}

}  // namespace deepwifi::mac
