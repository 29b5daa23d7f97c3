#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "deepwifi/jammer.hpp"

using namespace deepwifi::jammer;

namespace {

double on_rate(Jammer& j, double r, int n, std::uint64_t seed) {
  Rng rng(seed);
  int on = 0;
  for (int i = 0; i < n; ++i) on += j.step(r, rng).on;
  return static_cast<double>(on) / n;
}

}  // namespace

TEST_CASE("random jammer") {
  JammerParams p;
  Rng rng(1);
  p.p_jam = 0.0;
  for (int i = 0; i < 1000; ++i) CHECK_FALSE(random_step(p, rng).on);
  p.p_jam = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const auto d = random_step(p, rng);
    CHECK(d.on);
    CHECK(d.power == p.power);
  }
  p.p_jam = 0.7;
  Jammer j(p, 0);
  CHECK(on_rate(j, 0.0, 10000, 2) == doctest::Approx(0.7).epsilon(0.03 / 0.7));
}

TEST_CASE("sensing jammer") {
  JammerParams p;
  p.kind = JammerKind::static_sensing;
  p.p_jam = 0.0;
  Rng rng(3);
  CHECK(sensing_step(p, 1.0, 1.0, rng).on);
  CHECK_FALSE(sensing_step(p, 1.0, 0.0, rng).on);
  CHECK_FALSE(sensing_step(p, 1.0, 0.999, rng).on);
  p.p_jam = 0.7;
  Jammer j(p, 1);
  CHECK(on_rate(j, 0.5, 10000, 4) == doctest::Approx(0.7).epsilon(0.03 / 0.7));
  Jammer hot(p, 1);
  CHECK(on_rate(hot, 2.0, 1000, 4) == 1.0);

  // infinite threshold behaves like the random jammer
  p.tau0 = std::numeric_limits<double>::infinity();
  Jammer inf(p, 0);
  JammerParams rp = p;
  rp.kind = JammerKind::random;
  Jammer rnd(rp, 0);
  CHECK(on_rate(inf, 1e9, 10000, 5) == doctest::Approx(on_rate(rnd, 1e9, 10000, 6)).epsilon(0.05));
}

TEST_CASE("received power is scaled by the gain") {
  JammerParams p;
  p.kind = JammerKind::static_sensing;
  p.p_jam = 0.0;
  p.gain = 0.5;
  Jammer j(p, 0);
  Rng rng(1);
  CHECK_FALSE(j.step(1.5, rng).on);
  CHECK(j.step(2.0, rng).on);
}

TEST_CASE("adaptive utility") {
  CHECK(adaptive_utility({0.1, 0.2}, {0.0, 0.0}, {1.0, 1.0}, 1.0) == 0.0);
  CHECK(adaptive_utility({1.0}, {2.0}, {1.0}, 1.0) == 3.0);
  CHECK(adaptive_utility({1.0, 0.0, 5.0}, {2.0, 1.0, 7.0}, {1.0, 1.0, 1.0}, 0.0) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS(adaptive_utility({1.0}, {1.0, 2.0}, {1.0}, 1.0));
}

TEST_CASE("adaptive threshold update") {
  CHECK(adaptive_update(1.0, 3.0, 2.0, 0.5, 2) == 1.25);
  CHECK(adaptive_update(0.1, 2.0, 3.0, 0.5, 2) == 0.0);
  CHECK(adaptive_update(1.0, 2.0, 2.0, 0.5, 1) == 0.5);
  CHECK(std::abs(adaptive_update(1.0, 3.0, 2.0, 0.5, 100000) - 1.0) < 1e-5);
  CHECK_THROWS(adaptive_update(1.0, 3.0, 2.0, 0.5, 0));

  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  double tau = 1.0;
  for (std::size_t t = 1; t < 1000; ++t) {
    tau = adaptive_update(tau, u(rng), u(rng), 2.0, t);
    CHECK(tau >= 0.0);
  }
}

TEST_CASE("adaptive jammer with zero step is a static sensing jammer") {
  JammerParams a;
  a.kind = JammerKind::adaptive;
  a.delta = 0.0;
  a.p_jam = 0.3;
  JammerParams s = a;
  s.kind = JammerKind::static_sensing;
  Jammer ja(a, 0), js(s, 0);
  Rng r1(9), r2(9), rr(10);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 2000; ++i) {
    const double r = u(rr);
    CHECK(ja.step(r, r1).on == js.step(r, r2).on);
  }
  CHECK(ja.tau() == 1.0);
}

TEST_CASE("adaptive jammer moves its threshold and traces") {
  JammerParams a;
  a.kind = JammerKind::adaptive;
  a.p_jam = 0.2;
  a.window = 4;
  Jammer j(a, 2);
  j.set_tracing(true);
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 400; ++i) j.step(u(rng), rng);
  CHECK(j.updates() == 100);
  CHECK(j.tau() != 1.0);
  CHECK(j.tau() >= 0.0);
  REQUIRE(j.trace().size() == 400);
  CHECK(std::isnan(j.trace()[0].g));
  CHECK(!std::isnan(j.trace()[399].g));
  CHECK(j.trace()[5].channel == 2);
  const auto path = std::filesystem::temp_directory_path() / "deepwifi_jam_trace.csv";
  save_trace_csv(j.trace(), path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# deepwifi-csv jammer_trace v1");
  std::getline(in, line);
  CHECK(line == "slot,channel,on,tau,g");
  std::filesystem::remove(path);
}

TEST_CASE("parameter validation") {
  JammerParams p;
  p.p_jam = 1.5;
  CHECK_THROWS(Jammer(p, 0));
  p.p_jam = 0.5;
  p.window = 0;
  CHECK_THROWS(Jammer(p, 0));
  CHECK(kind_from_name("adaptive") == JammerKind::adaptive);
  CHECK_THROWS(kind_from_name("sweep"));
}
