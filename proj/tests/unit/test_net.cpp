#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include "deepwifi/net.hpp"
#include "deepwifi/util.hpp"

using namespace deepwifi;
using namespace deepwifi::net;

namespace {

const mac::McsTable& small_table() {
  static const mac::McsTable t = [] {
    mac::McsTableConfig c;
    c.trials = 30;
    c.payloads = {256, 1024};
    return mac::build_mcs_table(c);
  }();
  return t;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// exhaustive argmax over (flow, neighbor) with explicit tie ordering
BackpressureChoice brute_force(const std::vector<double>& qi, const std::vector<std::vector<double>>& qn,
                               const std::vector<double>& c) {
  std::vector<std::tuple<double, int, int>> all;
  for (std::size_t j = 0; j < qn.size(); ++j)
    for (std::size_t s = 0; s < qi.size(); ++s) {
      const double d = qi[s] - qn[j][s];
      all.emplace_back(c[j] * (d > 0 ? d : 0.0), static_cast<int>(s), static_cast<int>(j));
    }
  BackpressureChoice out;
  if (all.empty()) return out;
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  if (std::get<0>(all[0]) <= 0.0) return out;
  return {std::get<1>(all[0]), std::get<2>(all[0]), std::get<0>(all[0])};
}

ScenarioConfig quick(double p_jam, Policy policy = Policy::deepwifi) {
  ScenarioConfig c;
  c.slots = 300;
  c.flow_rate_kbps = 20000;
  c.snr_db = 0;
  c.sinr_db = 0;
  c.jammer.p_jam = p_jam;
  c.policy = policy;
  c.check_invariants = true;
  return c;
}

}  // namespace

TEST_CASE("traffic mean rate and edge cases") {
  Rng rng(3);
  std::vector<Flow> flows{{0, 0, 1, 500.0}};
  double total = 0;
  const int n = 100000;
  const double cap = 2 * 500e3 * kSlotSeconds;
  for (int i = 0; i < n; ++i) {
    const auto b = gen_traffic(flows, kSlotSeconds, rng);
    REQUIRE(b.size() == 1);
    CHECK(static_cast<double>(b[0]) <= cap + 0.5);
    total += static_cast<double>(b[0]);
  }
  const double kbps = total / (n * kSlotSeconds) / 1e3;
  CHECK(kbps == doctest::Approx(500.0).epsilon(0.02));
  CHECK(gen_traffic({}, kSlotSeconds, rng).empty());
  CHECK_THROWS_AS(gen_traffic(flows, 0.0, rng), std::invalid_argument);
}

TEST_CASE("flow validation") {
  CHECK_THROWS_AS((Flow{0, 2, 2, 1.0}.validate(4)), std::invalid_argument);
  CHECK_THROWS_AS((Flow{0, 0, 5, 1.0}.validate(4)), std::invalid_argument);
  CHECK_NOTHROW((Flow{0, 0, 3, 1.0}.validate(4)));
}

TEST_CASE("queue is FCFS and splits segments") {
  FlowQueue q;
  q.push(0, 100);
  q.push(1, 50);
  q.push(2, 0);
  CHECK(q.backlog() == 150);
  CHECK(q.segments().size() == 2);
  auto a = q.pop(120);
  REQUIRE(a.size() == 2);
  CHECK(a[0].seq == 0);
  CHECK(a[0].bits == 100);
  CHECK(a[1].seq == 1);
  CHECK(a[1].bits == 20);
  CHECK(q.backlog() == 30);
  auto b = q.pop(1000);
  REQUIRE(b.size() == 1);
  CHECK(b[0].bits == 30);
  CHECK(q.empty());
  CHECK(q.pop(5).empty());
}

TEST_CASE("backpressure examples") {
  auto r = backpressure_select({10, 4}, {{4, 4}}, {1.0});
  CHECK(r.flow == 0);
  CHECK(r.neighbor == 0);
  CHECK(r.utility == 6.0);

  r = backpressure_select({10, 0}, {{4, 0}, {4, 0}}, {2.0, 1.0});
  CHECK(r.neighbor == 0);
  CHECK(r.utility == 12.0);
  r = backpressure_select({10, 0}, {{4, 0}, {4, 0}}, {1.0, 2.0});
  CHECK(r.neighbor == 1);

  CHECK(backpressure_select({3, 1}, {{3, 5}, {7, 1}}, {1.0, 1.0}).none());
  CHECK(backpressure_select({3, 1}, {}, {}).none());
  CHECK(backpressure_select({9}, {{1}}, {0.0}).none());

  // ties: lower flow, then lower neighbor
  r = backpressure_select({5, 5}, {{0, 0}, {0, 0}}, {1.0, 1.0});
  CHECK(r.flow == 0);
  CHECK(r.neighbor == 0);
  r = backpressure_select({5, 6}, {{0, 1}, {0, 1}}, {1.0, 1.0});
  CHECK(r.flow == 0);
  CHECK(r.neighbor == 0);

  CHECK_THROWS_AS(backpressure_select({1}, {{1}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(backpressure_select({1, 2}, {{1}}, {1.0}), std::invalid_argument);
}

TEST_CASE("backpressure matches exhaustive enumeration") {
  Rng rng(11);
  std::uniform_int_distribution<int> users(2, 4), nflows(1, 2), q(0, 6), rate(0, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_nbr = users(rng) - 1;
    const int f = nflows(rng);
    std::vector<double> qi(static_cast<std::size_t>(f));
    for (auto& x : qi) x = q(rng);
    std::vector<std::vector<double>> qn(static_cast<std::size_t>(n_nbr), std::vector<double>(static_cast<std::size_t>(f)));
    for (auto& row : qn)
      for (auto& x : row) x = q(rng);
    std::vector<double> c(static_cast<std::size_t>(n_nbr));
    for (auto& x : c) x = 6.5 * rate(rng);
    const auto got = backpressure_select(qi, qn, c);
    const auto want = brute_force(qi, qn, c);
    CHECK(got.flow == want.flow);
    CHECK(got.neighbor == want.neighbor);
    CHECK(got.utility == want.utility);
  }
}

TEST_CASE("topology") {
  Rng rng(5);
  const Topology t = Topology::random(9, 100.0, 60.0, rng);
  CHECK(t.size() == 9);
  CHECK(t.connected());
  CHECK_NOTHROW(t.validate());
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b) CHECK(t.linked(a, b) == t.linked(b, a));

  const Topology line = Topology::from_links(3, {{0, 1}, {1, 2}, {1, 0}});
  CHECK(line.neighbors[1] == std::vector<int>{0, 2});
  CHECK_FALSE(line.linked(0, 2));
  CHECK(line.connected());
  CHECK_FALSE(Topology::from_links(3, {{0, 1}}).connected());
  Topology bad = line;
  bad.neighbors[0].clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(Topology::random(9, 100.0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("two users in range deliver min(queue, frame capacity)") {
  ScenarioConfig c;
  c.users = 2;
  c.channels = 4;
  c.flows = 1;
  c.jammer.p_jam = 0.0;
  c.check_invariants = true;
  for (double kbps : {500.0, 50000.0}) {
    c.flow_rate_kbps = kbps;
    Engine e(c, small_table());
    e.set_network(Topology::from_links(2, {{0, 1}}), {{0, 0, 1, kbps}});
    std::uint64_t prev = 0;
    for (int s = 0; s < 200; ++s) {
      const SlotMetrics m = e.step();
      const auto& tx = e.last_transmissions();
      REQUIRE(tx.size() == 1);
      const std::uint64_t queued = prev + m.arrivals_bits;
      CHECK(tx[0].success);
      CHECK(m.delivered_bits == std::min(queued, tx[0].capacity));
      CHECK(tx[0].capacity > 0);
      prev = e.backlog(0, 0);
    }
  }
}

TEST_CASE("all channels jammed: baseline delivers nothing, DeepWiFi keeps going") {
  const auto rb = run_scenario(quick(1.0, Policy::baseline), small_table());
  CHECK(rb.cumulative_mbps == 0.0);
  CHECK(rb.delivered_bits == 0);
  const auto rd = run_scenario(quick(1.0), small_table());
  CHECK(rd.cumulative_mbps > 0.0);
}

TEST_CASE("conservation and ordering hold in every mode") {
  std::vector<ScenarioConfig> cfgs;
  cfgs.push_back(quick(0.5));
  cfgs.push_back(quick(0.5, Policy::baseline));
  ScenarioConfig s = quick(0.7);
  s.flow_rate_kbps = 500;
  s.snr_db = 20;
  s.sinr_db = 5;
  s.lpi = true;
  s.jammer.kind = jammer::JammerKind::static_sensing;
  s.jammer.tau0 = db_to_linear(2.0);
  cfgs.push_back(s);
  s.jammer.kind = jammer::JammerKind::adaptive;
  s.jammer.tau0 = 1.0;
  cfgs.push_back(s);
  ScenarioConfig conf = quick(0.6);
  conf.labels = LabelMode::confusion;
  conf.confusion << 0.9, 0.05, 0.05, 0.05, 0.9, 0.05, 0.1, 0.1, 0.8;
  cfgs.push_back(conf);
  ScenarioConfig cong = quick(0.3);
  cong.channels = 6;
  cong.flows = 9;
  cfgs.push_back(cong);
  for (const auto& c : cfgs) {
    Engine e(c, small_table());
    RunResult r;
    CHECK_NOTHROW(r = e.run());
    std::uint64_t backlog = 0;
    for (int u = 0; u < c.users; ++u)
      for (int f = 0; f < c.flows; ++f) backlog += e.backlog(u, f);
    CHECK(r.offered_bits == r.delivered_bits + backlog);
    CHECK(r.slots.back().backlog_bits == backlog);
    CHECK(r.user_tx_mbps.size() == static_cast<std::size_t>(c.users));
  }
}

TEST_CASE("metrics: cumulative throughput is delivered bits over elapsed time") {
  const auto r = run_scenario(quick(0.4), small_table());
  std::uint64_t sum = 0;
  for (const auto& s : r.slots) sum += s.delivered_bits;
  CHECK(sum == r.delivered_bits);
  const double elapsed = static_cast<double>(r.slots.size()) * kSlotSeconds;
  CHECK(r.cumulative_mbps == doctest::Approx(static_cast<double>(sum) / elapsed / 1e6));
  CHECK(r.slots.back().cumulative_mbps == doctest::Approx(r.cumulative_mbps));
  double by_source = 0;
  for (double x : r.user_delivered_mbps) by_source += x;
  CHECK(by_source == doctest::Approx(r.cumulative_mbps));
}

TEST_CASE("same seed gives identical CSV output") {
  const auto dir = std::filesystem::temp_directory_path() / "deepwifi_net_test";
  std::filesystem::create_directories(dir);
  ScenarioConfig c = quick(0.6);
  c.labels = LabelMode::confusion;
  c.confusion << 0.9, 0.05, 0.05, 0.05, 0.9, 0.05, 0.1, 0.1, 0.8;
  for (int k = 0; k < 2; ++k) {
    const auto r = run_scenario(c, small_table());
    save_slots_csv(r, (dir / ("slots" + std::to_string(k) + ".csv")).string());
    save_summary_csv(c, r, (dir / ("summary" + std::to_string(k) + ".csv")).string());
    save_users_csv(r, (dir / ("users" + std::to_string(k) + ".csv")).string());
  }
  for (const char* f : {"slots", "summary", "users"}) {
    const std::string a = slurp((dir / (std::string(f) + "0.csv")).string());
    CHECK(a.rfind("# deepwifi-csv ", 0) == 0);
    CHECK(a == slurp((dir / (std::string(f) + "1.csv")).string()));
  }
  c.seed = 2;
  const auto other = run_scenario(c, small_table());
  const auto first = run_scenario(quick(0.6), small_table());
  CHECK(other.delivered_bits != first.delivered_bits);
  std::filesystem::remove_all(dir);
}

TEST_CASE("DeepWiFi is never below baseline") {
  for (double p : {0.0, 0.2, 0.8, 0.9, 1.0})
    for (std::uint64_t seed : {1, 2}) {
      ScenarioConfig d = quick(p);
      d.seed = seed;
      ScenarioConfig b = d;
      b.policy = Policy::baseline;
      const double td = run_scenario(d, small_table()).cumulative_mbps;
      const double tb = run_scenario(b, small_table()).cumulative_mbps;
      CHECK(td >= tb);
      if (p <= 0.2) CHECK(td == tb);
    }
}

TEST_CASE("sensing jammers and power control") {
  ScenarioConfig c;
  c.slots = 400;
  c.sinr_db = 5;
  c.lpi = true;
  c.jammer.kind = jammer::JammerKind::static_sensing;
  c.jammer.p_jam = 0.7;
  c.jammer.tau0 = db_to_linear(2.0);
  const auto d = run_scenario(c, small_table());
  ScenarioConfig b = c;
  b.policy = Policy::baseline;
  CHECK(run_scenario(b, small_table()).cumulative_mbps == 0.0);
  CHECK(d.cumulative_mbps > 0.0);
  const auto low = std::count_if(d.tx_power_db.begin(), d.tx_power_db.end(), [&](double p) { return p < d.tau_db; });
  CHECK(low > 0);
  CHECK(static_cast<std::size_t>(low) < d.tx_power_db.size());
  for (double p : d.tx_power_db) {
    CHECK(p <= c.p_max_db + 1e-9);
    CHECK(p >= c.p_min_db - 1e-9);
  }

  // without power control every frame goes out at full power
  c.lpi = false;
  const auto full = run_scenario(c, small_table());
  for (double p : full.tx_power_db) CHECK(p == doctest::Approx(c.p_max_db));
}

TEST_CASE("jammer with p_jam 0 never jams and overhead shrinks frames") {
  ScenarioConfig c = quick(0.0);
  Engine e(c, small_table());
  for (int s = 0; s < 50; ++s) CHECK(e.step().jammed_channels == 0);
  ScenarioConfig o = c;
  o.overhead_fraction = 0.5;
  Engine eo(o, small_table());
  Engine ef(c, small_table());
  eo.step();
  ef.step();
  REQUIRE(!eo.last_transmissions().empty());
  REQUIRE(!ef.last_transmissions().empty());
  const auto& a = eo.last_transmissions()[0];
  const auto& b = ef.last_transmissions()[0];
  CHECK(a.mcs_id == b.mcs_id);
  CHECK(a.capacity <= b.capacity / 2 + 1);
}

TEST_CASE("scenario config parsing") {
  std::istringstream in(R"(# comment
users = 6
channels=12   # trailing
flows = 3
policy = baseline
jammer = adaptive
tau_db = 2
p_jam = 0.25
lpi = yes
guard = 400
labels = confusion
confusion = 0.8,0.1,0.1, 0,1,0, 0,0,1
)");
  const ScenarioConfig c = parse_scenario(in);
  CHECK(c.users == 6);
  CHECK(c.channels == 12);
  CHECK(c.flows == 3);
  CHECK(c.policy == Policy::baseline);
  CHECK(c.jammer.kind == jammer::JammerKind::adaptive);
  CHECK(c.jammer.tau0 == doctest::Approx(db_to_linear(2.0)));
  CHECK(c.lpi);
  CHECK(c.guard == waveform::GuardInterval::short_400ns);
  CHECK(c.confusion(0, 1) == 0.1);

  std::istringstream again(dump_scenario(c));
  const ScenarioConfig d = parse_scenario(again);
  CHECK(dump_scenario(d) == dump_scenario(c));
  CHECK(d.jammer.tau0 == c.jammer.tau0);

  ScenarioConfig x;
  CHECK_THROWS_AS(apply_setting(x, "nonsense", "1"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(x, "users", "abc"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(x, "users", "2.5"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(x, "lpi", "maybe"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(x, "guard", "600"), std::invalid_argument);
  std::istringstream bad("users 9\n");
  CHECK_THROWS_AS(parse_scenario(bad), std::invalid_argument);
  std::istringstream invalid("users = 1\n");
  CHECK_THROWS_AS(parse_scenario(invalid), std::invalid_argument);

  ScenarioConfig v;
  v.jammer.p_jam = 1.5;
  CHECK_THROWS_AS(Engine(v, small_table()), std::invalid_argument);
  v = ScenarioConfig{};
  v.labels = LabelMode::bank;
  CHECK_THROWS_AS(Engine(v, small_table()), std::invalid_argument);
  v.labels = LabelMode::confusion;
  v.confusion(0, 0) = 0.5;
  CHECK_THROWS_AS(v.validate(), std::invalid_argument);

  CHECK(paper_preset().slots == 18235);
  ScenarioConfig dur;
  apply_setting(dur, "duration_s", "100");
  CHECK(dur.slots == 18235);
}

TEST_CASE("frame bank labels") {
  FrameBank b;
  b.predicted[0] = {Label::I, Label::I, Label::W, Label::I};
  b.predicted[1] = {Label::W};
  b.predicted[2] = {Label::J, Label::I};
  const auto cm = b.confusion();
  CHECK(cm(0, 0) == 0.75);
  CHECK(cm(0, 1) == 0.25);
  CHECK(cm(2, 0) == 0.5);
  for (int r = 0; r < 3; ++r) CHECK(cm.row(r).sum() == doctest::Approx(1.0));

  const auto path = (std::filesystem::temp_directory_path() / "deepwifi_bank.csv").string();
  b.save_csv(path);
  const FrameBank back = FrameBank::load_csv(path);
  for (int t = 0; t < 3; ++t) CHECK(back.predicted[static_cast<std::size_t>(t)] == b.predicted[static_cast<std::size_t>(t)]);
  std::filesystem::remove(path);

  // a perfect bank behaves like ground truth
  FrameBank perfect;
  for (int t = 0; t < 3; ++t) perfect.predicted[static_cast<std::size_t>(t)] = {static_cast<Label>(t)};
  ScenarioConfig c = quick(0.5);
  const auto truth = run_scenario(c, small_table());
  c.labels = LabelMode::bank;
  const auto banked = run_scenario(c, small_table(), &perfect);
  CHECK(banked.delivered_bits == truth.delivered_bits);
}

TEST_CASE("baseline senses by energy and ignores classifier errors") {
  ScenarioConfig c = quick(1.0);
  c.policy = Policy::baseline;
  const auto truth = run_scenario(c, small_table());
  c.labels = LabelMode::confusion;
  c.confusion << 0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.5, 0.25, 0.25;
  const auto noisy = run_scenario(c, small_table());
  CHECK(noisy.delivered_bits == truth.delivered_bits);
  CHECK(noisy.delivered_bits == 0);
  c.policy = Policy::deepwifi;
  CHECK(run_scenario(c, small_table()).delivered_bits != run_scenario(quick(1.0), small_table()).delivered_bits);
}

TEST_CASE("sweep shape") {
  SweepConfig sc;
  sc.base = quick(0.0);
  sc.base.slots = 50;
  sc.values = {0.0, 0.5, 1.0};
  sc.seeds = {1, 2};
  const auto rows = run_sweep(sc, small_table());
  CHECK(rows.size() == 3 * 2 * 2);
  CHECK(rows.front().policy == Policy::deepwifi);
  CHECK(rows.back().policy == Policy::baseline);
  const auto mean = sweep_mean(rows, Policy::baseline, sc.values);
  REQUIRE(mean.size() == 3);
  CHECK(mean[2] == 0.0);
  CHECK(p_jam_grid().size() == 21);
  CHECK(p_jam_grid()[20] == 1.0);

  const auto path = (std::filesystem::temp_directory_path() / "deepwifi_sweep.csv").string();
  save_sweep_csv(rows, SweepAxis::p_jam, path);
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == 2 + 12);
  std::filesystem::remove(path);
  CHECK(axis_from_name("sinr_db") == SweepAxis::sinr_db);
  CHECK_THROWS_AS(axis_from_name("x"), std::invalid_argument);
}
