#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "deepwifi/authfp.hpp"
#include "deepwifi/jammer.hpp"
#include "deepwifi/mac.hpp"
#include "deepwifi/net.hpp"
#include "deepwifi/waveform.hpp"

namespace py = pybind11;
using namespace deepwifi;

namespace {

waveform::GuardInterval guard_of(int ns) {
  if (ns == 800) return waveform::GuardInterval::long_800ns;
  if (ns == 400) return waveform::GuardInterval::short_400ns;
  throw std::invalid_argument("guard interval must be 800 or 400 ns");
}

std::string as_text(const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "true" : "false";
  return py::str(v).cast<std::string>();
}

net::ScenarioConfig scenario_from(const py::dict& settings) {
  net::ScenarioConfig cfg;
  for (auto [k, v] : settings) net::apply_setting(cfg, k.cast<std::string>(), as_text(v));
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_deepwifi, m) {
  m.doc() = "DeepWiFi anti-jamming stack simulator";
  m.attr("__version__") = DEEPWIFI_VERSION;

  m.def("mcs_rate", [](int mcs_id, int guard_ns) { return mac::mcs_rate(mcs_id, guard_of(guard_ns)); },
        py::arg("mcs_id"), py::arg("guard_ns") = 800);

  m.def(
      "mcs_select",
      [](double sinr_db, int payload_bytes, int guard_ns) {
        const auto c = mac::mcs_select(sinr_db, payload_bytes, guard_of(guard_ns), mac::default_mcs_table());
        return py::make_tuple(c.mcs_id, c.rate_mbps, c.decodable);
      },
      py::arg("sinr_db"), py::arg("payload_bytes") = 1024, py::arg("guard_ns") = 800,
      "(mcs_id, rate_mbps, decodable) from the built-in threshold table.");

  m.def(
      "link_rate",
      [](double sinr_db, int payload_bytes, int guard_ns) {
        return mac::link_rate(sinr_db, payload_bytes, guard_of(guard_ns), mac::default_mcs_table());
      },
      py::arg("sinr_db"), py::arg("payload_bytes") = 1024, py::arg("guard_ns") = 800);

  m.def(
      "lpi_power",
      [](double required_sinr_db, double gain, double noise, double interference, double p_max, double p_min) {
        const auto c = mac::lpi_power(required_sinr_db, {gain, noise, interference}, p_max, p_min);
        return py::make_tuple(c.power, c.degraded);
      },
      py::arg("required_sinr_db"), py::arg("gain") = 1.0, py::arg("noise") = 1.0, py::arg("interference") = 0.0,
      py::arg("p_max") = 10.0, py::arg("p_min") = 1e-9);

  m.def(
      "backpressure_select",
      [](const std::vector<double>& q_self, const std::vector<std::vector<double>>& q_nbr,
         const std::vector<double>& rates) -> py::object {
        const auto c = net::backpressure_select(q_self, q_nbr, rates);
        if (c.none()) return py::none();
        return py::make_tuple(c.flow, c.neighbor, c.utility);
      },
      py::arg("q_self"), py::arg("q_nbr"), py::arg("rates"),
      "(flow, neighbor, utility), or None when nothing has positive utility.");

  m.def("adaptive_utility", &jammer::adaptive_utility, py::arg("r"), py::arg("p"), py::arg("tau"), py::arg("w"));
  m.def("adaptive_update", &jammer::adaptive_update, py::arg("tau"), py::arg("g_prev"), py::arg("g_cur"),
        py::arg("delta"), py::arg("t"));

  m.def(
      "gen_wifi",
      [](int mcs_id, std::size_t payload_bytes, std::size_t n_samples, std::uint64_t seed) {
        waveform::Rng rng(seed);
        return waveform::gen_wifi(mcs_id, payload_bytes, waveform::OfdmGrid{}, n_samples, rng).samples;
      },
      py::arg("mcs_id") = 0, py::arg("payload_bytes") = 0, py::arg("n_samples") = waveform::kDefaultFrameLength,
      py::arg("seed") = 1);

  m.def(
      "apply_impairments",
      [](const waveform::Samples& x, double p, double q, double cfo_hz, double psi_db, double phi_deg) {
        authfp::ImpairmentProfile prof;
        prof.p = p;
        prof.q = q;
        prof.cfo_hz = cfo_hz;
        prof.psi_db = psi_db;
        prof.phi_deg = phi_deg;
        return authfp::apply_impairments(x, prof);
      },
      py::arg("samples"), py::arg("p") = 1e4, py::arg("q") = 1e4, py::arg("cfo_hz") = 0.0, py::arg("psi_db") = 0.0,
      py::arg("phi_deg") = 0.0);

  m.def("p_jam_grid", &net::p_jam_grid);

  m.def(
      "simulate",
      [](const py::dict& settings) {
        const auto cfg = scenario_from(settings);
        net::RunResult r;
        {
          py::gil_scoped_release release;
          r = net::run_scenario(cfg, mac::default_mcs_table());
        }
        py::dict out;
        out["cumulative_mbps"] = r.cumulative_mbps;
        out["offered_bits"] = r.offered_bits;
        out["delivered_bits"] = r.delivered_bits;
        out["user_tx_mbps"] = r.user_tx_mbps;
        out["tx_power_db"] = r.tx_power_db;
        out["tau_db"] = r.tau_db;
        std::vector<double> cum;
        for (const auto& s : r.slots) cum.push_back(s.cumulative_mbps);
        out["cumulative_by_slot"] = cum;
        return out;
      },
      py::arg("settings") = py::dict(),
      "Run one scenario. Settings use the scenario file keys, e.g. {'p_jam': 0.5, 'slots': 500}.");

  m.def(
      "sweep",
      [](const py::dict& settings, const std::string& axis, const std::vector<double>& values,
         const std::vector<std::uint64_t>& seeds) {
        net::SweepConfig sc;
        sc.base = scenario_from(settings);
        sc.axis = net::axis_from_name(axis);
        sc.values = values.empty() ? net::p_jam_grid() : values;
        sc.seeds = seeds;
        std::vector<net::SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = net::run_sweep(sc, mac::default_mcs_table());
        }
        py::list out;
        for (const auto& r : rows)
          out.append(py::make_tuple(net::policy_name(r.policy), r.value, r.seed, r.cumulative_mbps, r.offered_mbps));
        return out;
      },
      py::arg("settings") = py::dict(), py::arg("axis") = "p_jam", py::arg("values") = std::vector<double>{},
      py::arg("seeds") = std::vector<std::uint64_t>{1, 2, 3, 4, 5},
      "Rows (policy, value, seed, cumulative_mbps, offered_mbps).");
}
