#include "deepwifi/net.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "deepwifi/util.hpp"

namespace deepwifi::net {

namespace {

enum Stream : std::uint64_t { kTopo = 1, kFlows, kTraffic, kJam, kLabel, kSinr, kOrder, kMac };

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number for " + key + ": " + v);
  }
}

long long to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw std::invalid_argument("expected an integer for " + key + ": " + v);
  return static_cast<long long>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("bad boolean for " + key + ": " + v);
}

double unit_from_hash(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

void write_header(std::ofstream& out, const std::string& path, const char* kind) {
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# deepwifi-csv " << kind << " v1\n";
  out.precision(10);
}

}  // namespace

void Flow::validate(int n_users) const {
  if (source < 0 || source >= n_users || dest < 0 || dest >= n_users)
    throw std::invalid_argument("flow endpoint out of range");
  if (source == dest) throw std::invalid_argument("flow source equals destination");
  if (!(rate_kbps >= 0.0)) throw std::invalid_argument("flow rate must be >= 0");
}

std::vector<std::uint64_t> gen_traffic(const std::vector<Flow>& flows, double slot_seconds, Rng& rng) {
  if (!(slot_seconds > 0.0)) throw std::invalid_argument("slot duration must be positive");
  std::vector<std::uint64_t> bits(flows.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t f = 0; f < flows.size(); ++f) {
    const double kbps = 2.0 * flows[f].rate_kbps * u(rng);
    bits[f] = static_cast<std::uint64_t>(std::llround(kbps * 1e3 * slot_seconds));
  }
  return bits;
}

void FlowQueue::push(std::uint64_t seq, std::uint64_t bits) {
  if (bits == 0) return;
  q_.push_back({seq, bits, next_stamp_++});
  backlog_ += bits;
}

std::vector<Segment> FlowQueue::pop(std::uint64_t bits) {
  std::vector<Segment> out;
  while (bits > 0 && !q_.empty()) {
    Segment& head = q_.front();
    const std::uint64_t take = std::min(bits, head.bits);
    out.push_back({head.seq, take, head.stamp});
    head.bits -= take;
    backlog_ -= take;
    bits -= take;
    if (head.bits == 0) q_.pop_front();
  }
  return out;
}

BackpressureChoice backpressure_select(const std::vector<double>& q_self,
                                       const std::vector<std::vector<double>>& q_nbr,
                                       const std::vector<double>& rates) {
  if (q_nbr.size() != rates.size()) throw std::invalid_argument("neighbor queue and rate lists differ in length");
  BackpressureChoice best;
  for (std::size_t s = 0; s < q_self.size(); ++s)
    for (std::size_t j = 0; j < q_nbr.size(); ++j) {
      if (q_nbr[j].size() != q_self.size()) throw std::invalid_argument("neighbor flow count mismatch");
      const double diff = std::max(q_self[s] - q_nbr[j][s], 0.0);
      const double u = rates[j] * diff;
      if (u > best.utility) best = {static_cast<int>(s), static_cast<int>(j), u};
    }
  return best;
}

bool Topology::linked(int a, int b) const {
  const auto& n = neighbors[static_cast<std::size_t>(a)];
  return std::binary_search(n.begin(), n.end(), b);
}

bool Topology::connected() const {
  if (size() == 0) return true;
  std::vector<bool> seen(size(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : neighbors[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        ++count;
        stack.push_back(w);
      }
  }
  return count == size();
}

void Topology::validate() const {
  if (neighbors.size() != positions.size()) throw std::invalid_argument("topology size mismatch");
  const int n = static_cast<int>(size());
  for (int a = 0; a < n; ++a)
    for (int b : neighbors[static_cast<std::size_t>(a)]) {
      if (b < 0 || b >= n || b == a) throw std::invalid_argument("bad neighbor index");
      if (!linked(b, a)) throw std::invalid_argument("neighbor relation is not symmetric");
    }
}

Topology Topology::random(int n_users, double area, double range, Rng& rng) {
  if (n_users < 1) throw std::invalid_argument("need at least one user");
  std::uniform_real_distribution<double> u(0.0, area);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Topology t;
    t.positions.resize(static_cast<std::size_t>(n_users));
    for (auto& p : t.positions) p = {u(rng), u(rng)};
    t.neighbors.assign(static_cast<std::size_t>(n_users), {});
    for (int a = 0; a < n_users; ++a)
      for (int b = 0; b < n_users; ++b) {
        if (a == b) continue;
        const auto& pa = t.positions[static_cast<std::size_t>(a)];
        const auto& pb = t.positions[static_cast<std::size_t>(b)];
        if (std::hypot(pa[0] - pb[0], pa[1] - pb[1]) <= range) t.neighbors[static_cast<std::size_t>(a)].push_back(b);
      }
    if (t.connected()) return t;
  }
  throw std::invalid_argument("could not draw a connected topology; increase range");
}

Topology Topology::from_links(int n_users, const std::vector<std::pair<int, int>>& links) {
  Topology t;
  t.positions.assign(static_cast<std::size_t>(n_users), {0.0, 0.0});
  t.neighbors.assign(static_cast<std::size_t>(n_users), {});
  for (auto [a, b] : links) {
    if (a < 0 || b < 0 || a >= n_users || b >= n_users || a == b) throw std::invalid_argument("bad link");
    t.neighbors[static_cast<std::size_t>(a)].push_back(b);
    t.neighbors[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& n : t.neighbors) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return t;
}

std::string policy_name(Policy p) { return p == Policy::deepwifi ? "deepwifi" : "baseline"; }

Policy policy_from_name(const std::string& s) {
  if (s == "deepwifi") return Policy::deepwifi;
  if (s == "baseline") return Policy::baseline;
  throw std::invalid_argument("unknown policy: " + s);
}

std::string label_mode_name(LabelMode m) {
  switch (m) {
    case LabelMode::truth: return "truth";
    case LabelMode::confusion: return "confusion";
    case LabelMode::bank: return "bank";
  }
  return "?";
}

LabelMode label_mode_from_name(const std::string& s) {
  if (s == "truth") return LabelMode::truth;
  if (s == "confusion") return LabelMode::confusion;
  if (s == "bank") return LabelMode::bank;
  throw std::invalid_argument("unknown label mode: " + s);
}

nn::Matrix FrameBank::confusion() const {
  nn::Matrix cm = nn::Matrix::Zero(3, 3);
  for (int t = 0; t < 3; ++t) {
    const auto& p = predicted[static_cast<std::size_t>(t)];
    for (Label l : p) cm(t, static_cast<int>(l)) += 1.0;
    if (!p.empty()) cm.row(t) /= static_cast<double>(p.size());
  }
  return cm;
}

void FrameBank::save_csv(const std::string& path) const {
  std::ofstream out(path);
  write_header(out, path, "frame_bank");
  out << "true_label,predicted_label\n";
  for (int t = 0; t < 3; ++t)
    for (Label l : predicted[static_cast<std::size_t>(t)])
      out << waveform::label_char(static_cast<Label>(t)) << ',' << waveform::label_char(l) << '\n';
}

FrameBank FrameBank::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  FrameBank b;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "true_label,predicted_label") throw std::runtime_error("bad frame bank header in " + path);
      header = true;
      continue;
    }
    if (line.size() != 3 || line[1] != ',') throw std::runtime_error("bad frame bank row: " + line);
    const Label t = waveform::label_from_char(line[0]);
    b.predicted[static_cast<std::size_t>(t)].push_back(waveform::label_from_char(line[2]));
  }
  return b;
}

FrameBank build_frame_bank(const classifier::Pipeline& pipeline, const waveform::DatasetConfig& cfg,
                           std::uint64_t seed) {
  const waveform::Dataset ds = waveform::make_dataset(cfg, seed);
  FrameBank b;
  for (const auto& f : ds.frames)
    b.predicted[static_cast<std::size_t>(f.label)].push_back(pipeline.classify_frame(f.samples).label);
  return b;
}

void ScenarioConfig::validate() const {
  if (users < 2) throw std::invalid_argument("need at least two users");
  if (channels < 1) throw std::invalid_argument("need at least one channel");
  if (flows < 0) throw std::invalid_argument("flow count must be >= 0");
  if (!(flow_rate_kbps >= 0.0)) throw std::invalid_argument("flow rate must be >= 0");
  if (slots < 1) throw std::invalid_argument("need at least one slot");
  if (!(sinr_spread_db >= 0.0)) throw std::invalid_argument("SINR spread must be >= 0");
  if (!std::isfinite(snr_db) || !std::isfinite(sinr_db)) throw std::invalid_argument("SNR values must be finite");
  if (!(p_min_db <= p_max_db)) throw std::invalid_argument("p_min must not exceed p_max");
  if (!(area > 0.0) || !(range > 0.0)) throw std::invalid_argument("area and range must be positive");
  if (payload_bytes <= 0) throw std::invalid_argument("payload must be positive");
  if (!(overhead_fraction >= 0.0 && overhead_fraction < 1.0)) throw std::invalid_argument("overhead must be in [0, 1)");
  if (labels == LabelMode::confusion) {
    if (confusion.rows() != 3 || confusion.cols() != 3) throw std::invalid_argument("confusion matrix must be 3x3");
    for (int r = 0; r < 3; ++r) {
      if ((confusion.row(r).array() < 0.0).any()) throw std::invalid_argument("negative confusion entry");
      if (std::abs(confusion.row(r).sum() - 1.0) > 1e-9) throw std::invalid_argument("confusion rows must sum to 1");
    }
  }
  jammer.validate();
}

void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "users") c.users = static_cast<int>(to_int(key, v));
  else if (key == "channels") c.channels = static_cast<int>(to_int(key, v));
  else if (key == "flows") c.flows = static_cast<int>(to_int(key, v));
  else if (key == "flow_rate_kbps") c.flow_rate_kbps = to_double(key, v);
  else if (key == "slots") {
    const long long n = to_int(key, v);
    if (n < 1) throw std::invalid_argument("slots must be >= 1");
    c.slots = static_cast<std::size_t>(n);
  } else if (key == "duration_s") {
    const double d = to_double(key, v);
    if (!(d > 0.0)) throw std::invalid_argument("duration must be positive");
    c.slots = static_cast<std::size_t>(std::llround(d / kSlotSeconds));
  } else if (key == "seed") {
    const long long s = to_int(key, v);
    if (s < 0) throw std::invalid_argument("seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "policy") c.policy = policy_from_name(v);
  else if (key == "lpi") c.lpi = to_bool(key, v);
  else if (key == "jammer") c.jammer.kind = jammer::kind_from_name(v);
  else if (key == "p_jam") c.jammer.p_jam = to_double(key, v);
  else if (key == "tau") c.jammer.tau0 = to_double(key, v);
  else if (key == "tau_db") c.jammer.tau0 = db_to_linear(to_double(key, v));
  else if (key == "jam_window") {
    const long long w = to_int(key, v);
    if (w < 1) throw std::invalid_argument("jam_window must be >= 1");
    c.jammer.window = static_cast<std::size_t>(w);
  } else if (key == "jam_w") c.jammer.w = to_double(key, v);
  else if (key == "jam_delta") c.jammer.delta = to_double(key, v);
  else if (key == "jam_gain") c.jammer.gain = to_double(key, v);
  else if (key == "jam_power") c.jammer.power = to_double(key, v);
  else if (key == "snr_db") c.snr_db = to_double(key, v);
  else if (key == "sinr_db") c.sinr_db = to_double(key, v);
  else if (key == "sinr_spread_db") c.sinr_spread_db = to_double(key, v);
  else if (key == "p_max_db") c.p_max_db = to_double(key, v);
  else if (key == "p_min_db") c.p_min_db = to_double(key, v);
  else if (key == "area") c.area = to_double(key, v);
  else if (key == "range") c.range = to_double(key, v);
  else if (key == "payload") c.payload_bytes = static_cast<int>(to_int(key, v));
  else if (key == "guard") {
    const long long g = to_int(key, v);
    if (g == 800) c.guard = waveform::GuardInterval::long_800ns;
    else if (g == 400) c.guard = waveform::GuardInterval::short_400ns;
    else throw std::invalid_argument("guard must be 800 or 400");
  } else if (key == "overhead") c.overhead_fraction = to_double(key, v);
  else if (key == "labels") c.labels = label_mode_from_name(v);
  else if (key == "confusion") {
    std::stringstream ss(v);
    std::string item;
    std::vector<double> xs;
    while (std::getline(ss, item, ',')) xs.push_back(to_double(key, trim(item)));
    if (xs.size() != 9) throw std::invalid_argument("confusion needs 9 comma-separated values");
    for (int i = 0; i < 9; ++i) c.confusion(i / 3, i % 3) = xs[static_cast<std::size_t>(i)];
  } else if (key == "bank") c.bank_path = v;
  else if (key == "check_invariants") c.check_invariants = to_bool(key, v);
  else throw std::invalid_argument("unknown setting: " + key);
}

ScenarioConfig parse_scenario(std::istream& in, ScenarioConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  base.validate();
  return base;
}

ScenarioConfig load_scenario(const std::string& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path);
  return parse_scenario(in, std::move(base));
}

std::string dump_scenario(const ScenarioConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "users = " << c.users << "\nchannels = " << c.channels << "\nflows = " << c.flows
    << "\nflow_rate_kbps = " << c.flow_rate_kbps << "\nslots = " << c.slots << "\nseed = " << c.seed
    << "\npolicy = " << policy_name(c.policy) << "\nlpi = " << (c.lpi ? 1 : 0)
    << "\njammer = " << jammer::kind_name(c.jammer.kind) << "\np_jam = " << c.jammer.p_jam
    << "\ntau = " << c.jammer.tau0 << "\njam_window = " << c.jammer.window << "\njam_w = " << c.jammer.w
    << "\njam_delta = " << c.jammer.delta << "\njam_gain = " << c.jammer.gain << "\njam_power = " << c.jammer.power
    << "\nsnr_db = " << c.snr_db << "\nsinr_db = " << c.sinr_db << "\nsinr_spread_db = " << c.sinr_spread_db
    << "\np_max_db = " << c.p_max_db << "\np_min_db = " << c.p_min_db << "\narea = " << c.area
    << "\nrange = " << c.range << "\npayload = " << c.payload_bytes
    << "\nguard = " << (c.guard == waveform::GuardInterval::long_800ns ? 800 : 400)
    << "\noverhead = " << c.overhead_fraction << "\nlabels = " << label_mode_name(c.labels) << "\nconfusion = ";
  for (int i = 0; i < 9; ++i) o << (i ? "," : "") << c.confusion(i / 3, i % 3);
  if (!c.bank_path.empty()) o << "\nbank = " << c.bank_path;
  o << "\ncheck_invariants = " << (c.check_invariants ? 1 : 0) << '\n';
  return o.str();
}

ScenarioConfig paper_preset() {
  ScenarioConfig c;
  c.slots = static_cast<std::size_t>(std::llround(100.0 / kSlotSeconds));
  return c;
}

Engine::Engine(const ScenarioConfig& cfg, const mac::McsTable& table, const FrameBank* bank)
    : cfg_(cfg),
      table_(table),
      bank_(bank),
      traffic_rng_(derive_seed(cfg.seed, kTraffic)),
      jam_rng_(derive_seed(cfg.seed, kJam)),
      sinr_rng_(derive_seed(cfg.seed, kSinr)),
      order_rng_(derive_seed(cfg.seed, kOrder)),
      label_key_(derive_seed(cfg.seed, kLabel)) {
  cfg_.validate();
  if (cfg_.labels == LabelMode::bank) {
    if (!bank_) throw std::invalid_argument("bank label mode needs a frame bank");
    for (const auto& p : bank_->predicted)
      if (p.empty()) throw std::invalid_argument("frame bank has an empty class");
  }
  const int n = cfg_.users;
  Rng topo_rng(derive_seed(cfg_.seed, kTopo));
  Rng flow_rng(derive_seed(cfg_.seed, kFlows));
  Topology topo = Topology::random(n, cfg_.area, cfg_.range, topo_rng);

  std::vector<int> sources(static_cast<std::size_t>(n));
  std::iota(sources.begin(), sources.end(), 0);
  std::shuffle(sources.begin(), sources.end(), flow_rng);
  std::vector<Flow> flows;
  for (int f = 0; f < cfg_.flows; ++f) {
    Flow fl;
    fl.id = f;
    fl.source = sources[static_cast<std::size_t>(f % n)];
    std::uniform_int_distribution<int> d(0, n - 2);
    fl.dest = d(flow_rng);
    if (fl.dest >= fl.source) ++fl.dest;
    fl.rate_kbps = cfg_.flow_rate_kbps;
    flows.push_back(fl);
  }
  set_network(topo, flows);

  for (int c = 0; c < cfg_.channels; ++c) jammers_.emplace_back(cfg_.jammer, c);
  backoff_.assign(static_cast<std::size_t>(n), mac::BackoffState(static_cast<std::size_t>(cfg_.channels)));
  for (int u = 0; u < n; ++u) mac_key_.push_back(derive_seed(derive_seed(cfg_.seed, kMac), static_cast<std::uint64_t>(u)));
}

void Engine::set_jammer_tracing(bool on) {
  for (auto& j : jammers_) j.set_tracing(on);
}

void Engine::set_network(const Topology& topo, const std::vector<Flow>& flows) {
  if (static_cast<int>(topo.size()) != cfg_.users) throw std::invalid_argument("topology size does not match users");
  topo.validate();
  for (const auto& f : flows) f.validate(cfg_.users);
  topo_ = topo;
  flows_ = flows;
  queues_.assign(static_cast<std::size_t>(cfg_.users), std::vector<FlowQueue>(flows_.size()));
  next_seq_.assign(flows_.size(), 0);
  user_tx_bits_.assign(static_cast<std::size_t>(cfg_.users), 0);
  user_delivered_bits_.assign(static_cast<std::size_t>(cfg_.users), 0);
}

std::uint64_t Engine::backlog(int user, int flow) const { return queue(user, flow).backlog(); }

const FlowQueue& Engine::queue(int user, int flow) const {
  return queues_.at(static_cast<std::size_t>(user)).at(static_cast<std::size_t>(flow));
}

Label Engine::observe(Label truth, int user, int channel) {
  // energy detection settles idle vs busy for everyone; only DeepWiFi asks
  // the classifier what a busy channel holds
  if (cfg_.labels == LabelMode::truth || cfg_.policy == Policy::baseline || truth == Label::I) return truth;
  const std::uint64_t h = derive_seed(derive_seed(label_key_, slot_),
                                      static_cast<std::uint64_t>(user) * static_cast<std::uint64_t>(cfg_.channels) +
                                          static_cast<std::uint64_t>(channel));
  const int t = static_cast<int>(truth);
  Label got = truth;
  if (cfg_.labels == LabelMode::bank) {
    const auto& p = bank_->predicted[static_cast<std::size_t>(t)];
    got = p[h % p.size()];
  } else {
    const double x = unit_from_hash(h);
    double acc = 0.0;
    for (int l = 0; l < 3; ++l) {
      acc += cfg_.confusion(t, l);
      if (x < acc) {
        got = static_cast<Label>(l);
        break;
      }
    }
  }
  return got == Label::I ? Label::W : got;
}

std::uint64_t Engine::frame_bits(double rate_mbps) const {
  return static_cast<std::uint64_t>(std::floor(rate_mbps * 1e6 * kSlotSeconds * (1.0 - cfg_.overhead_fraction)));
}

SlotMetrics Engine::step() {
  const int n = cfg_.users;
  const int m = cfg_.channels;
  const std::size_t nf = flows_.size();
  const auto& edges = table_.for_payload(cfg_.payload_bytes);
  const double p_max = db_to_linear(cfg_.p_max_db);
  const double p_min = db_to_linear(cfg_.p_min_db);
  auto idx = [](int i) { return static_cast<std::size_t>(i); };

  SlotMetrics sm;
  sm.slot = slot_;

  std::vector<std::vector<std::uint64_t>> before;
  if (cfg_.check_invariants) {
    before.assign(idx(n), std::vector<std::uint64_t>(nf));
    for (int u = 0; u < n; ++u)
      for (std::size_t f = 0; f < nf; ++f) before[idx(u)][f] = queues_[idx(u)][f].backlog();
  }

  // arrivals
  const auto arrivals = gen_traffic(flows_, kSlotSeconds, traffic_rng_);
  for (std::size_t f = 0; f < nf; ++f) {
    queues_[idx(flows_[f].source)][f].push(next_seq_[f]++, arrivals[f]);
    sm.arrivals_bits += arrivals[f];
  }

  // channel snapshot: probabilistic jammer part and per-slot SINR draws
  std::vector<bool> start_on(idx(m));
  for (int c = 0; c < m; ++c) start_on[idx(c)] = jammers_[idx(c)].draw(jam_rng_);
  std::uniform_real_distribution<double> spread(-cfg_.sinr_spread_db, cfg_.sinr_spread_db);
  // per-slot fading of each channel at each receiver; jamming lowers the mean
  std::vector<double> fade(idx(n * m));
  for (auto& x : fade) x = spread(sinr_rng_);
  const double jam_mean = std::min(cfg_.snr_db, cfg_.sinr_db);
  auto sinr_at = [&](int j, int c, bool jammed) { return (jammed ? jam_mean : cfg_.snr_db) + fade[idx(j * m + c)]; };

  // queue information exchanged at the start of the slot
  std::vector<std::vector<double>> q(idx(n), std::vector<double>(nf));
  for (int u = 0; u < n; ++u)
    for (std::size_t f = 0; f < nf; ++f) q[idx(u)][f] = static_cast<double>(queues_[idx(u)][f].backlog());

  std::vector<int> order(idx(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), order_rng_);

  std::vector<std::vector<int>> on_channel(idx(m));
  std::vector<Transmission> txs;
  mac::ChannelView view(idx(m));
  for (int u : order) {
    bool any = false;
    for (std::size_t f = 0; f < nf; ++f) any = any || queues_[idx(u)][f].backlog() > 0;
    if (!any) continue;

    for (int c = 0; c < m; ++c) {
      Label truth = Label::I;
      if (start_on[idx(c)]) {
        truth = Label::J;
      } else {
        for (int k : on_channel[idx(c)])
          if (topo_.linked(u, k)) truth = Label::W;
      }
      view[idx(c)].label = observe(truth, u, c);
      view[idx(c)].sinr_db = sinr_at(u, c, start_on[idx(c)]);
      view[idx(c)].authenticated = true;
    }
    // fresh per-slot stream, so one different decision does not shift later draws
    Rng mac_rng(derive_seed(mac_key_[idx(u)], slot_));
    const mac::Action act = cfg_.policy == Policy::deepwifi ? mac::deepwifi_scan(view, backoff_[idx(u)], mac_rng)
                                                            : mac::baseline_scan(view, backoff_[idx(u)], mac_rng);
    if (act.kind != mac::Action::transmit) continue;
    const int c = act.channel;

    const auto& nb = topo_.neighbors[idx(u)];
    std::vector<double> rates(nb.size());
    std::vector<std::vector<double>> q_nbr(nb.size());
    for (std::size_t j = 0; j < nb.size(); ++j) {
      rates[j] = mac::link_rate(sinr_at(nb[j], c, start_on[idx(c)]), cfg_.payload_bytes, cfg_.guard, table_);
      q_nbr[j] = q[idx(nb[j])];
    }
    const BackpressureChoice bp = backpressure_select(q[idx(u)], q_nbr, rates);
    if (bp.none()) continue;

    Transmission t;
    t.src = u;
    t.dst = nb[idx(bp.neighbor)];
    t.channel = c;
    t.flow = bp.flow;
    t.degraded = act.degraded;
    t.sinr_db = sinr_at(t.dst, c, start_on[idx(c)]);
    const mac::McsChoice mc = mac::mcs_select(t.sinr_db, cfg_.payload_bytes, cfg_.guard, table_);
    t.mcs_id = mc.mcs_id;
    t.capacity = frame_bits(mc.rate_mbps);
    t.bits = std::min(queues_[idx(u)][idx(t.flow)].backlog(), t.capacity);
    t.power = p_max;
    if (cfg_.lpi && cfg_.policy == Policy::deepwifi) {
      int need = mc.mcs_id;
      for (int k = 0; k < mc.mcs_id; ++k)
        if (frame_bits(mac::mcs_rate(k, cfg_.guard)) >= t.bits) {
          need = k;
          break;
        }
      const mac::LinkState link{db_to_linear(t.sinr_db) / p_max, 1.0, 0.0};
      t.power = mac::lpi_power(edges[idx(need)], link, p_max, p_min).power;
      t.mcs_id = need;
      t.capacity = frame_bits(mac::mcs_rate(need, cfg_.guard));
    }
    on_channel[idx(c)].push_back(u);
    txs.push_back(t);
  }

  // jammers sense what was sent
  std::vector<double> rx_power(idx(m), 0.0);
  for (const auto& t : txs) rx_power[idx(t.channel)] += t.power;
  std::vector<bool> end_on(idx(m));
  for (int c = 0; c < m; ++c) {
    end_on[idx(c)] = jammers_[idx(c)].resolve(rx_power[idx(c)]).on;
    if (end_on[idx(c)]) ++sm.jammed_channels;
  }

  for (auto& t : txs) {
    t.jammed = end_on[idx(t.channel)];
    const double sinr = sinr_at(t.dst, t.channel, t.jammed) + linear_to_db(t.power / p_max);
    for (const auto& o : txs) {
      if (&o == &t || o.channel != t.channel) continue;
      if (o.src == t.dst || topo_.linked(o.src, t.src)) t.collided = true;
    }
    t.success = !t.collided && sinr >= edges[idx(t.mcs_id)] - 1e-9;
    ++sm.transmissions;
    if (t.collided) ++sm.collisions;
    acc_.tx_power_db.push_back(linear_to_db(t.power));
  }

  std::vector<std::vector<std::uint64_t>> received, sent;
  if (cfg_.check_invariants) {
    received.assign(idx(n), std::vector<std::uint64_t>(nf, 0));
    sent.assign(idx(n), std::vector<std::uint64_t>(nf, 0));
  }
  std::vector<std::pair<const Transmission*, std::vector<Segment>>> moved;
  for (const auto& t : txs) {
    if (!t.success) continue;
    auto segs = queues_[idx(t.src)][idx(t.flow)].pop(t.bits);
    ++sm.successes;
    user_tx_bits_[idx(t.src)] += t.bits;
    acc_.padding_bits += t.capacity - t.bits;
    if (cfg_.check_invariants) sent[idx(t.src)][idx(t.flow)] += t.bits;
    moved.emplace_back(&t, std::move(segs));
  }
  for (auto& [t, segs] : moved) {
    const Flow& fl = flows_[idx(t->flow)];
    for (const auto& s : segs) {
      if (t->dst == fl.dest) {
        sm.delivered_bits += s.bits;
        user_delivered_bits_[idx(fl.source)] += s.bits;
      } else {
        queues_[idx(t->dst)][idx(t->flow)].push(s.seq, s.bits);
        if (cfg_.check_invariants) received[idx(t->dst)][idx(t->flow)] += s.bits;
      }
    }
  }

  if (cfg_.check_invariants) {
    std::vector<std::uint64_t> arr_at(idx(n) * nf, 0);
    for (std::size_t f = 0; f < nf; ++f) arr_at[idx(flows_[f].source) * nf + f] = arrivals[f];
    for (int u = 0; u < n; ++u)
      for (std::size_t f = 0; f < nf; ++f) {
        const FlowQueue& fq = queues_[idx(u)][f];
        if (before[idx(u)][f] + arr_at[idx(u) * nf + f] + received[idx(u)][f] != sent[idx(u)][f] + fq.backlog())
          throw std::logic_error("queue conservation violated");
        std::uint64_t prev = 0;
        bool first = true;
        std::uint64_t total = 0;
        for (const auto& s : fq.segments()) {
          if (!first && s.stamp <= prev) throw std::logic_error("FCFS order violated");
          prev = s.stamp;
          first = false;
          total += s.bits;
        }
        if (total != fq.backlog()) throw std::logic_error("queue backlog mismatch");
      }
  }

  for (int u = 0; u < n; ++u)
    for (std::size_t f = 0; f < nf; ++f) sm.backlog_bits += queues_[idx(u)][f].backlog();
  acc_.offered_bits += sm.arrivals_bits;
  acc_.delivered_bits += sm.delivered_bits;
  ++slot_;
  sm.cumulative_mbps = static_cast<double>(acc_.delivered_bits) / (static_cast<double>(slot_) * kSlotSeconds) / 1e6;
  last_tx_ = std::move(txs);
  return sm;
}

RunResult Engine::run() {
  acc_.slots.reserve(acc_.slots.size() + cfg_.slots);
  for (std::size_t s = 0; s < cfg_.slots; ++s) acc_.slots.push_back(step());
  RunResult r = acc_;
  const double elapsed = static_cast<double>(slot_) * kSlotSeconds;
  r.cumulative_mbps = static_cast<double>(r.delivered_bits) / elapsed / 1e6;
  r.user_tx_mbps.clear();
  r.user_delivered_mbps.clear();
  for (int u = 0; u < cfg_.users; ++u) {
    r.user_tx_mbps.push_back(static_cast<double>(user_tx_bits_[static_cast<std::size_t>(u)]) / elapsed / 1e6);
    r.user_delivered_mbps.push_back(static_cast<double>(user_delivered_bits_[static_cast<std::size_t>(u)]) / elapsed / 1e6);
  }
  r.tau_db = cfg_.jammer.tau0 > 0.0 ? linear_to_db(cfg_.jammer.tau0) : -std::numeric_limits<double>::infinity();
  return r;
}

RunResult run_scenario(const ScenarioConfig& cfg, const mac::McsTable& table, const FrameBank* bank) {
  Engine e(cfg, table, bank);
  return e.run();
}

void save_slots_csv(const RunResult& r, const std::string& path) {
  std::ofstream out(path);
  write_header(out, path, "slots");
  out << "slot,arrivals_bits,delivered_bits,backlog_bits,transmissions,successes,collisions,jammed_channels,"
         "cumulative_mbps\n";
  for (const auto& s : r.slots)
    out << s.slot << ',' << s.arrivals_bits << ',' << s.delivered_bits << ',' << s.backlog_bits << ','
        << s.transmissions << ',' << s.successes << ',' << s.collisions << ',' << s.jammed_channels << ','
        << s.cumulative_mbps << '\n';
}

void save_users_csv(const RunResult& r, const std::string& path) {
  std::ofstream out(path);
  write_header(out, path, "users");
  out << "user,tx_mbps,delivered_mbps\n";
  for (std::size_t u = 0; u < r.user_tx_mbps.size(); ++u)
    out << u + 1 << ',' << r.user_tx_mbps[u] << ',' << r.user_delivered_mbps[u] << '\n';
}

void save_powers_csv(const RunResult& r, const std::string& path) {
  std::ofstream out(path);
  write_header(out, path, "tx_power");
  out << "power_db,below_tau\n";
  for (double p : r.tx_power_db) out << p << ',' << (p < r.tau_db ? 1 : 0) << '\n';
}

void save_summary_csv(const ScenarioConfig& cfg, const RunResult& r, const std::string& path) {
  std::ofstream out(path);
  write_header(out, path, "summary");
  const double elapsed = static_cast<double>(r.slots.size()) * kSlotSeconds;
  out << "policy,jammer,p_jam,sinr_db,tau_db,lpi,seed,slots,offered_mbps,cumulative_mbps,padding_bits\n";
  out << policy_name(cfg.policy) << ',' << jammer::kind_name(cfg.jammer.kind) << ',' << cfg.jammer.p_jam << ','
      << cfg.sinr_db << ',' << r.tau_db << ',' << (cfg.lpi ? 1 : 0) << ',' << cfg.seed << ',' << r.slots.size() << ','
      << static_cast<double>(r.offered_bits) / elapsed / 1e6 << ',' << r.cumulative_mbps << ',' << r.padding_bits
      << '\n';
}

std::string axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::p_jam: return "p_jam";
    case SweepAxis::sinr_db: return "sinr_db";
    case SweepAxis::tau_db: return "tau_db";
  }
  return "?";
}

SweepAxis axis_from_name(const std::string& s) {
  if (s == "p_jam") return SweepAxis::p_jam;
  if (s == "sinr_db") return SweepAxis::sinr_db;
  if (s == "tau_db") return SweepAxis::tau_db;
  throw std::invalid_argument("unknown sweep axis: " + s);
}

std::vector<double> p_jam_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 20; ++i) g.push_back(i / 20.0);
  return g;
}

void set_axis(ScenarioConfig& cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::p_jam: cfg.jammer.p_jam = value; break;
    case SweepAxis::sinr_db: cfg.sinr_db = value; break;
    case SweepAxis::tau_db: cfg.jammer.tau0 = db_to_linear(value); break;
  }
}

std::vector<SweepRow> run_sweep(const SweepConfig& sc, const mac::McsTable& table, const FrameBank* bank) {
  struct Job {
    Policy policy;
    double value;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Policy p : sc.policies)
    for (double v : sc.values)
      for (std::uint64_t seed : sc.seeds) jobs.push_back({p, v, seed});
  std::vector<SweepRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        ScenarioConfig cfg = sc.base;
        cfg.policy = jobs[i].policy;
        cfg.seed = jobs[i].seed;
        set_axis(cfg, sc.axis, jobs[i].value);
        const RunResult r = run_scenario(cfg, table, bank);
        const double elapsed = static_cast<double>(cfg.slots) * kSlotSeconds;
        rows[i] = {jobs[i].policy, jobs[i].value, jobs[i].seed, r.cumulative_mbps,
                   static_cast<double>(r.offered_bits) / elapsed / 1e6};
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next = jobs.size();
      }
    }
  };
  std::size_t n = sc.threads ? sc.threads : std::max(1u, std::thread::hardware_concurrency());
  n = std::min(n, jobs.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

void save_sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis, const std::string& path) {
  std::ofstream out(path);
  write_header(out, path, "sweep");
  out << "policy," << axis_name(axis) << ",seed,cumulative_mbps,offered_mbps\n";
  for (const auto& r : rows)
    out << policy_name(r.policy) << ',' << r.value << ',' << r.seed << ',' << r.cumulative_mbps << ','
        << r.offered_mbps << '\n';
}

std::vector<double> sweep_mean(const std::vector<SweepRow>& rows, Policy policy, const std::vector<double>& values) {
  std::vector<double> out;
  for (double v : values) {
    double sum = 0.0;
    int k = 0;
    for (const auto& r : rows)
      if (r.policy == policy && r.value == v) {
        sum += r.cumulative_mbps;
        ++k;
      }
    out.push_back(k ? sum / k : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

}  // namespace deepwifi::net
