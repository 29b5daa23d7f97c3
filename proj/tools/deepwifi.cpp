// deepwifi command line: dataset generation, training, authentication
// evaluation, MCS table derivation, simulation and sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepwifi/authfp.hpp"
#include "deepwifi/classifier.hpp"
#include "deepwifi/frontend.hpp"
#include "deepwifi/mac.hpp"
#include "deepwifi/net.hpp"
#include "deepwifi/nn.hpp"
#include "deepwifi/util.hpp"
#include "deepwifi/waveform.hpp"

using namespace deepwifi;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum Exit { ok = 0, config_error = 1, numeric_failure = 2, threshold_failure = 3 };

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Manifest {
  std::string command;
  std::string config;  // canonical text the hash is taken over
  std::vector<std::uint64_t> seeds;
  std::vector<fs::path> outputs;
};

std::string hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex(fnv1a(ss.str()));
}

void write_manifest(const fs::path& root, const Manifest& m) {
  json j;
  j["command"] = m.command;
  j["version"] = DEEPWIFI_VERSION;
  j["config_hash"] = hex(fnv1a(m.config));
  j["config"] = m.config;
  j["seeds"] = m.seeds;
  std::string all;
  json outs = json::array();
  for (const auto& p : m.outputs) {
    const std::string h = fs::is_directory(p) ? "" : file_hash(p);
    all += h;
    outs.push_back({{"path", p.lexically_relative(root).string()}, {"fnv1a", h}});
  }
  j["outputs"] = outs;
  j["artifact"] = hex(fnv1a(m.config + all));
  const fs::path path = root / ("manifest_" + m.command + ".json");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path output_root(const std::string& flag) {
  fs::path p = flag;
  if (p.empty()) {
    const char* env = std::getenv("DEEPWIFI_OUT");
    p = env && *env ? env : "deepwifi_out";
  }
  fs::create_directories(p);
  return p;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> v;
  const auto colon = std::count(s.begin(), s.end(), ':');
  if (colon == 2) {
    double a, step, b;
    char c1, c2;
    std::istringstream in(s);
    if (!(in >> a >> c1 >> step >> c2 >> b) || !(step > 0.0)) throw std::invalid_argument("bad range " + s);
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) v.push_back(a + static_cast<double>(i) * step);
    return v;
  }
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) v.push_back(std::stod(item));
  if (v.empty()) throw std::invalid_argument("empty value list");
  return v;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (double v : parse_values(s)) {
    if (v < 0 || v != std::floor(v)) throw std::invalid_argument("seeds must be non-negative integers");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

void check_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericError(what + " is not finite");
}

struct Common {
  std::string out;
};

// ---- gen-data -------------------------------------------------------------

struct GenDataOpts {
  std::size_t n_per_class = 400;
  std::size_t frame_length = waveform::kDefaultFrameLength;
  bool paper = false;
  std::uint64_t seed = 1;
  std::string file = "dataset.dwds";
};

int gen_data(const Common& c, const GenDataOpts& o) {
  waveform::DatasetConfig dc;
  dc.n_per_class = o.paper ? 4000 : o.n_per_class;
  dc.n_samples = o.frame_length;
  const auto ds = waveform::make_dataset(dc, o.seed);
  const fs::path root = output_root(c.out);
  const fs::path path = root / o.file;
  waveform::write_dataset_file(ds, path.string());
  std::printf("%zu frames (%zu train, %zu test) -> %s\n", ds.frames.size(), ds.train.size(), ds.test.size(),
              path.c_str());
  std::ostringstream cfg;
  cfg << "n_per_class = " << dc.n_per_class << "\nframe_length = " << dc.n_samples;
  write_manifest(root, {"gen-data", cfg.str(), {o.seed}, {path}});
  return ok;
}

// ---- train ----------------------------------------------------------------

struct TrainOpts {
  std::string dataset;
  std::uint64_t seed = 1;
  std::size_t dae_epochs = 20;
  std::size_t clf_epochs = 100;
  std::size_t bank_per_class = 400;
};

int train(const Common& c, const TrainOpts& o) {
  const fs::path root = output_root(c.out);
  const fs::path ds_path = o.dataset.empty() ? root / "dataset.dwds" : fs::path(o.dataset);
  if (!fs::exists(ds_path)) throw std::invalid_argument("dataset not found: " + ds_path.string());
  const auto ds = waveform::read_dataset_file(ds_path.string());
  frontend::DaeConfig dae;
  dae.seed = o.seed;
  dae.epochs = o.dae_epochs;
  classifier::ClassifierConfig cc;
  cc.seed = o.seed;
  cc.epochs = o.clf_epochs;
  const auto rep = classifier::train_pipeline(ds, frontend::FrontEndConfig{}, dae, cc);
  for (const auto& h : rep.dae_history) check_finite(h.train_loss, "autoencoder loss");
  for (const auto& h : rep.classifier_history) check_finite(h.train_loss, "classifier loss");

  const fs::path model = root / "model";
  rep.pipeline.save(model.string());
  const fs::path dae_csv = root / "dae_history.csv", clf_csv = root / "classifier_history.csv",
                 conf_csv = root / "confusion.csv", bank_csv = root / "frame_bank.csv";
  frontend::save_history_csv(rep.dae_history, dae_csv.string());
  classifier::save_history_csv(rep.classifier_history, clf_csv.string());
  classifier::save_confusion_csv(rep.confusion_test, conf_csv.string());
  waveform::DatasetConfig bank_cfg;
  bank_cfg.n_per_class = o.bank_per_class;
  bank_cfg.n_samples = ds.n_samples;
  const auto bank = net::build_frame_bank(rep.pipeline, bank_cfg, derive_seed(o.seed, 1000));
  bank.save_csv(bank_csv.string());

  const auto rec = classifier::recall(rep.confusion_test);
  std::printf("autoencoder relative MSE %.4f\n", rep.dae_relative_mse_test);
  std::printf("classifier test accuracy %.4f (recall I %.3f W %.3f J %.3f)\n", rep.test_accuracy, rec[0], rec[1],
              rec[2]);
  std::ostringstream cfg;
  cfg << "dataset = " << file_hash(ds_path) << "\ndae_epochs = " << o.dae_epochs << "\nclassifier_epochs = "
      << o.clf_epochs << "\nbank_per_class = " << o.bank_per_class;
  write_manifest(root, {"train", cfg.str(), {o.seed}, {model, dae_csv, clf_csv, conf_csv, bank_csv}});
  return ok;
}

// ---- auth-eval ------------------------------------------------------------

struct AuthOpts {
  std::uint64_t seed = 1;
  std::string rule = "chi2";
  int per_user_snr = 50;
};

int auth_eval(const Common& c, const AuthOpts& o) {
  authfp::AuthScenarioConfig cfg;
  if (o.rule == "chi2") cfg.rule = authfp::ThresholdRule::chi2;
  else if (o.rule == "quantile") cfg.rule = authfp::ThresholdRule::train_quantile;
  else throw std::invalid_argument("unknown threshold rule " + o.rule);
  if (o.per_user_snr < 2) throw std::invalid_argument("need at least 2 signatures per user and SNR");
  cfg.per_user_snr = o.per_user_snr;
  const auto recs = authfp::make_signature_dataset(cfg, o.seed);
  const auto rep = authfp::evaluate_auth(recs, cfg, o.seed);
  check_finite(rep.threshold, "authentication threshold");
  const fs::path root = output_root(c.out);
  const fs::path sig_csv = root / "signatures.csv", auth_csv = root / "auth.csv",
                 metrics_csv = root / "auth_metrics.csv";
  authfp::save_signatures_csv(recs, sig_csv.string());
  authfp::save_auth_csv(rep, auth_csv.string());
  authfp::save_auth_metrics_csv(rep, metrics_csv.string());
  std::printf("accuracy %.4f, outlier false-accept %.4f, identification %.4f\n", rep.accuracy,
              rep.outlier_false_accept, rep.identification_accuracy);
  write_manifest(root, {"auth-eval", "rule = " + o.rule + "\nper_user_snr = " + std::to_string(o.per_user_snr),
                        {o.seed}, {sig_csv, auth_csv, metrics_csv}});
  return ok;
}

// ---- mcs-table ------------------------------------------------------------

struct McsOpts {
  std::size_t trials = 200;
  std::uint64_t seed = 8;
  std::string payloads = "256,512,1024";
};

int mcs_table(const Common& c, const McsOpts& o) {
  mac::McsTableConfig cfg;
  cfg.trials = o.trials;
  cfg.seed = o.seed;
  cfg.payloads.clear();
  for (double p : parse_values(o.payloads)) {
    if (p < 1 || p != std::floor(p)) throw std::invalid_argument("payloads must be positive integers");
    cfg.payloads.push_back(static_cast<int>(p));
  }
  const auto table = mac::build_mcs_table(cfg);
  const fs::path root = output_root(c.out);
  const fs::path path = root / "mcs_table.csv";
  table.save_csv(path.string());
  for (std::size_t i = 0; i < table.payloads.size(); ++i) {
    std::printf("%5d B:", table.payloads[i]);
    for (double e : table.edges_db[i]) std::printf(" %6.2f", e);
    std::printf("\n");
  }
  write_manifest(root, {"mcs-table", "trials = " + std::to_string(o.trials) + "\npayloads = " + o.payloads,
                        {o.seed}, {path}});
  return ok;
}

// ---- simulate / sweep -----------------------------------------------------

struct ScenarioOpts {
  std::string config;
  bool paper = false;
  std::vector<std::string> sets;
  std::string mcs_table;
  bool trace = false;
};

net::ScenarioConfig load_config(const ScenarioOpts& o) {
  net::ScenarioConfig cfg = o.paper ? net::paper_preset() : net::ScenarioConfig{};
  if (!o.config.empty()) {
    if (!fs::exists(o.config)) throw std::invalid_argument("config not found: " + o.config);
    cfg = net::load_scenario(o.config, cfg);
  }
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got " + s);
    net::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

struct Artifacts {
  mac::McsTable table;
  net::FrameBank bank;
  bool has_bank = false;
};

Artifacts load_artifacts(const ScenarioOpts& o, const net::ScenarioConfig& cfg) {
  Artifacts a;
  if (!o.mcs_table.empty()) {
    if (!fs::exists(o.mcs_table)) throw std::invalid_argument("MCS table not found: " + o.mcs_table);
    a.table = mac::McsTable::load_csv(o.mcs_table);
  } else {
    a.table = mac::default_mcs_table();
  }
  if (cfg.labels == net::LabelMode::bank) {
    if (cfg.bank_path.empty() || !fs::exists(cfg.bank_path))
      throw std::invalid_argument("labels = bank needs an existing frame bank (bank = <path>)");
    a.bank = net::FrameBank::load_csv(cfg.bank_path);
    a.has_bank = true;
  }
  return a;
}

int simulate(const Common& c, const ScenarioOpts& o) {
  const auto cfg = load_config(o);
  const auto art = load_artifacts(o, cfg);
  net::Engine engine(cfg, art.table, art.has_bank ? &art.bank : nullptr);
  engine.set_jammer_tracing(o.trace);
  const auto r = engine.run();
  check_finite(r.cumulative_mbps, "throughput");
  const fs::path root = output_root(c.out);
  const fs::path slots = root / "slots.csv", users = root / "users.csv", power = root / "tx_power.csv",
                 summary = root / "summary.csv", trace = root / "jammer_trace.csv";
  std::vector<fs::path> outputs = {slots, users, power, summary};
  if (o.trace) {
    std::vector<jammer::TraceRow> rows;
    for (const auto& j : engine.jammers()) rows.insert(rows.end(), j.trace().begin(), j.trace().end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.slot < b.slot; });
    jammer::save_trace_csv(rows, trace.string());
    outputs.push_back(trace);
  }
  net::save_slots_csv(r, slots.string());
  net::save_users_csv(r, users.string());
  net::save_powers_csv(r, power.string());
  net::save_summary_csv(cfg, r, summary.string());
  std::printf("%s: %.3f Mb/s delivered of %.3f offered over %zu slots\n", net::policy_name(cfg.policy).c_str(),
              r.cumulative_mbps,
              static_cast<double>(r.offered_bits) / (static_cast<double>(cfg.slots) * net::kSlotSeconds) / 1e6,
              cfg.slots);
  write_manifest(root, {"simulate", net::dump_scenario(cfg), {cfg.seed}, outputs});
  return ok;
}

struct SweepOpts {
  std::string axis = "p_jam";
  std::string values;
  std::string seeds = "1,2,3,4,5";
  std::string policies = "deepwifi,baseline";
  std::size_t threads = 0;
};

int sweep(const Common& c, const ScenarioOpts& so, const SweepOpts& o) {
  net::SweepConfig sc;
  sc.base = load_config(so);
  sc.axis = net::axis_from_name(o.axis);
  if (!o.values.empty()) sc.values = parse_values(o.values);
  else if (sc.axis == net::SweepAxis::p_jam) sc.values = net::p_jam_grid();
  else if (sc.axis == net::SweepAxis::sinr_db) sc.values = parse_values("0:1:20");
  else sc.values = parse_values("-10:1:10");
  sc.seeds = parse_seeds(o.seeds);
  sc.policies.clear();
  std::istringstream in(o.policies);
  for (std::string p; std::getline(in, p, ',');) sc.policies.push_back(net::policy_from_name(p));
  sc.threads = o.threads;
  const auto art = load_artifacts(so, sc.base);
  const auto rows = net::run_sweep(sc, art.table, art.has_bank ? &art.bank : nullptr);
  for (const auto& r : rows) check_finite(r.cumulative_mbps, "throughput");
  const fs::path root = output_root(c.out);
  const fs::path path = root / ("sweep_" + o.axis + ".csv");
  net::save_sweep_csv(rows, sc.axis, path.string());
  for (auto p : sc.policies) {
    const auto m = net::sweep_mean(rows, p, sc.values);
    std::printf("%-9s", net::policy_name(p).c_str());
    for (double v : m) std::printf(" %.2f", v);
    std::printf("\n");
  }
  std::string cfg = net::dump_scenario(sc.base) + "\naxis = " + o.axis + "\nvalues =";
  for (double v : sc.values) cfg += " " + std::to_string(v);
  cfg += "\npolicies = " + o.policies;
  write_manifest(root, {"sweep", cfg, sc.seeds, {path}});
  return ok;
}

// ---- selftest -------------------------------------------------------------

int selftest() {
  int failed = 0;
  auto check = [&](const char* name, bool pass, const std::string& detail) {
    std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    failed += !pass;
  };
  {
    nn::Network net({{6, 5, nn::Activation::tanh, 0.0}, {5, 3, nn::Activation::softmax, 0.0}}, 3);
    nn::Rng rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    nn::Vector x(6);
    for (auto& v : x) v = g(rng);
    nn::Vector t = nn::Vector::Zero(3);
    t[1] = 1.0;
    const double e = nn::gradient_check(net, x, t, nn::LossKind::cross_entropy);
    char buf[64];
    std::snprintf(buf, sizeof buf, "max relative error %.3g", e);
    check("gradient", e < 1e-4, buf);
  }
  {
    waveform::Rng rng(5);
    const auto f = waveform::gen_wifi(2, 0, {}, 1024, rng);
    const auto out = authfp::apply_impairments(f.samples, authfp::ImpairmentProfile::identity());
    double worst = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) worst = std::max(worst, std::abs(out[i] - f.samples[i]));
    char buf[64];
    std::snprintf(buf, sizeof buf, "max error %.3g", worst);
    check("impairment identity", worst < 1e-12, buf);
  }
  {
    const auto choice = net::backpressure_select({5, 3}, {{1, 0}, {4, 0}}, {10, 20});
    check("backpressure", choice.flow == 1 && choice.neighbor == 1 && choice.utility == 60.0,
          "flow " + std::to_string(choice.flow) + " neighbor " + std::to_string(choice.neighbor));
  }
  {
    net::ScenarioConfig cfg;
    cfg.slots = 200;
    cfg.check_invariants = true;
    const auto r = net::run_scenario(cfg, mac::default_mcs_table());
    check("simulator conservation", r.delivered_bits <= r.offered_bits && r.cumulative_mbps > 0.0,
          std::to_string(r.cumulative_mbps) + " Mb/s");
  }
  return failed ? threshold_failure : ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DeepWiFi anti-jamming stack simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DEEPWIFI_VERSION);
  Common common;
  app.add_option("-o,--out", common.out, "Output directory (default $DEEPWIFI_OUT or ./deepwifi_out)");

  GenDataOpts gd;
  auto* gen = app.add_subcommand("gen-data", "Generate the labelled I/Q dataset");
  gen->add_option("--n-per-class", gd.n_per_class, "Frames per class")->check(CLI::PositiveNumber);
  gen->add_option("--frame-length", gd.frame_length, "Samples per frame")->check(CLI::Range(64, 1 << 20));
  gen->add_flag("--paper-scale", gd.paper, "4000 frames per class");
  gen->add_option("--seed", gd.seed);
  gen->add_option("--file", gd.file, "Dataset file name");

  TrainOpts tr;
  auto* trn = app.add_subcommand("train", "Train the autoencoder and classifier, write a frame bank");
  trn->add_option("--dataset", tr.dataset, "Dataset file (default <out>/dataset.dwds)");
  trn->add_option("--seed", tr.seed);
  trn->add_option("--dae-epochs", tr.dae_epochs)->check(CLI::PositiveNumber);
  trn->add_option("--classifier-epochs", tr.clf_epochs)->check(CLI::PositiveNumber);
  trn->add_option("--bank-per-class", tr.bank_per_class, "Frames per class in the frame bank")
      ->check(CLI::PositiveNumber);

  AuthOpts au;
  auto* auth = app.add_subcommand("auth-eval", "RF fingerprint authentication scenario");
  auth->add_option("--seed", au.seed);
  auth->add_option("--rule", au.rule, "chi2 or quantile");
  auth->add_option("--per-user-snr", au.per_user_snr, "Signatures per user and SNR");

  McsOpts mo;
  auto* mcs = app.add_subcommand("mcs-table", "Derive SINR thresholds per MCS and payload");
  mcs->add_option("--trials", mo.trials)->check(CLI::PositiveNumber);
  mcs->add_option("--seed", mo.seed);
  mcs->add_option("--payloads", mo.payloads, "Comma-separated payload sizes in bytes");

  ScenarioOpts so;
  auto scenario_options = [&](CLI::App* sub) {
    sub->add_option("-c,--config", so.config, "Scenario file (key = value lines)");
    sub->add_flag("--paper-scale", so.paper, "Start from the 100 s preset");
    sub->add_option("-s,--set", so.sets, "Override one setting, key=value");
    sub->add_option("--mcs-table", so.mcs_table, "Threshold CSV from mcs-table");
  };
  auto* sim = app.add_subcommand("simulate", "Run one network scenario");
  scenario_options(sim);
  sim->add_flag("--trace", so.trace, "Also write the per-slot jammer trace");

  SweepOpts sw;
  auto* swp = app.add_subcommand("sweep", "Sweep p_jam, sinr_db or tau_db over seeds and policies");
  scenario_options(swp);
  swp->add_option("--axis", sw.axis, "p_jam, sinr_db or tau_db");
  swp->add_option("--values", sw.values, "start:step:stop or a comma list");
  swp->add_option("--seeds", sw.seeds);
  swp->add_option("--policies", sw.policies);
  swp->add_option("--threads", sw.threads, "Worker threads (0 = all cores)");

  auto* self = app.add_subcommand("selftest", "Quick correctness checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*gen) return gen_data(common, gd);
    if (*trn) return train(common, tr);
    if (*auth) return auth_eval(common, au);
    if (*mcs) return mcs_table(common, mo);
    if (*sim) return simulate(common, so);
    if (*swp) return sweep(common, so, sw);
    if (*self) return selftest();
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return numeric_failure;
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::out_of_range*>(&e)) {
      std::cerr << "config error: " << e.what() << '\n';
      return config_error;
    }
    std::cerr << "internal error: " << e.what() << '\n';
    return numeric_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  }
  return ok;
}
