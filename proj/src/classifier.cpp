#include "deepwifi/classifier.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace deepwifi::classifier {

namespace {

Matrix one_hot(const std::vector<Label>& labels) {
  Matrix t = Matrix::Zero(3, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<int>(labels[i]), static_cast<Eigen::Index>(i)) = 1.0;
  return t;
}

double accuracy_of(const Matrix& probs, const std::vector<Label>& labels) {
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (argmax_label(probs.col(static_cast<Eigen::Index>(i))) == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

void check_labels(const Matrix& features, const std::vector<Label>& labels) {
  if (static_cast<std::size_t>(features.cols()) != labels.size())
    throw std::invalid_argument("feature/label count mismatch");
}

}  // namespace

nn::Network build_classifier(std::size_t input_dim, const ClassifierConfig& cfg) {
  if (cfg.hidden == 0) return nn::Network({{input_dim, 3, nn::Activation::softmax, 0.0}}, cfg.seed);
  return nn::Network({{input_dim, cfg.hidden, nn::Activation::relu, cfg.dropout},
                      {cfg.hidden, 3, nn::Activation::softmax, 0.0}},
                     cfg.seed);
}

TrainResult train_fnn(const Matrix& train_features, const std::vector<Label>& train_labels,
                      const Matrix& test_features, const std::vector<Label>& test_labels,
                      const ClassifierConfig& cfg) {
  check_labels(train_features, train_labels);
  check_labels(test_features, test_labels);
  if (train_labels.empty()) throw std::invalid_argument("empty training set");
  if (cfg.batch == 0) throw std::invalid_argument("batch must be >= 1");
  TrainResult result;
  nn::Network net = build_classifier(static_cast<std::size_t>(train_features.rows()), cfg);
  nn::AdamState adam(net, cfg.lr);
  nn::Rng rng(cfg.seed ^ 0xc1a55ULL);
  const Matrix train_t = one_hot(train_labels);
  const Matrix test_t = one_hot(test_labels);
  const bool has_test = !test_labels.empty();

  auto record = [&](std::size_t epoch) {
    const Matrix ptr = net.forward_batch(train_features);
    EpochMetrics m{epoch, nn::batch_loss(nn::LossKind::cross_entropy, ptr, train_t), accuracy_of(ptr, train_labels),
                   0.0, 0.0};
    if (has_test) {
      const Matrix pte = net.forward_batch(test_features);
      m.test_loss = nn::batch_loss(nn::LossKind::cross_entropy, pte, test_t);
      m.test_accuracy = accuracy_of(pte, test_labels);
    }
    result.history.push_back(m);
    return has_test ? m.test_loss : m.train_loss;
  };

  double best = record(0);
  nn::Network best_net = net;
  std::size_t since_best = 0;
  std::vector<Eigen::Index> order(train_labels.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const auto bs = static_cast<Eigen::Index>(end - start);
      Matrix x(train_features.rows(), bs);
      Matrix t(3, bs);
      for (Eigen::Index c = 0; c < bs; ++c) {
        x.col(c) = train_features.col(order[start + static_cast<std::size_t>(c)]);
        t.col(c) = train_t.col(order[start + static_cast<std::size_t>(c)]);
      }
      double loss = 0.0;
      const nn::Gradients g = nn::backward_batch(net, x, t, nn::LossKind::cross_entropy, &rng, &loss);
      if (!std::isfinite(loss)) throw nn::NumericError("classifier loss diverged");
      nn::adam_step(net, g, adam);
    }
    const double monitored = record(epoch);
    if (monitored < best) {
      best = monitored;
      best_net = net;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  result.model.net = std::move(best_net);
  return result;
}

Label argmax_label(const Vector& p) {
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (p[i] > p[best]) best = i;
  return static_cast<Label>(best);
}

Classification classify(const ClassifierModel& model, const Vector& feature) {
  const Vector p = model.net.forward(feature);
  return {argmax_label(p), {p[0], p[1], p[2]}};
}

std::vector<Classification> classify_batch(const ClassifierModel& model, const Matrix& features) {
  const Matrix p = model.net.forward_batch(features);
  std::vector<Classification> out;
  out.reserve(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index c = 0; c < p.cols(); ++c) out.push_back({argmax_label(p.col(c)), {p(0, c), p(1, c), p(2, c)}});
  return out;
}

Matrix confusion(const ClassifierModel& model, const Matrix& features, const std::vector<Label>& labels) {
  check_labels(features, labels);
  if (labels.empty()) throw std::invalid_argument("empty test set");
  Matrix cm = Matrix::Zero(3, 3);
  const auto preds = classify_batch(model, features);
  for (std::size_t i = 0; i < labels.size(); ++i) cm(static_cast<int>(labels[i]), static_cast<int>(preds[i].label)) += 1.0;
  return cm / static_cast<double>(labels.size());
}

double accuracy(const Matrix& cm) { return cm.trace(); }

std::array<double, 3> recall(const Matrix& cm) {
  std::array<double, 3> r{};
  for (int i = 0; i < 3; ++i) {
    const double row = cm.row(i).sum();
    r[static_cast<std::size_t>(i)] = row > 0.0 ? cm(i, i) / row : 0.0;
  }
  return r;
}

void save_history_csv(const std::vector<EpochMetrics>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# deepwifi-csv classifier_metrics v1\n";
  out << "epoch,train_loss,train_accuracy,test_loss,test_accuracy\n";
  out.precision(10);
  for (const auto& m : history)
    out << m.epoch << ',' << m.train_loss << ',' << m.train_accuracy << ',' << m.test_loss << ',' << m.test_accuracy
        << '\n';
}

void save_confusion_csv(const Matrix& cm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# deepwifi-csv confusion v1\n";
  out << "true_label,pred_I,pred_W,pred_J\n";
  out.precision(10);
  for (int i = 0; i < 3; ++i)
    out << waveform::label_char(static_cast<Label>(i)) << ',' << cm(i, 0) << ',' << cm(i, 1) << ',' << cm(i, 2) << '\n';
}

Vector Pipeline::features(const waveform::Samples& samples) const {
  return standardizer.apply(frontend::encode(dae, frontend::preprocess(samples, fe)));
}

Matrix Pipeline::features(const std::vector<waveform::IqFrame>& frames, const std::vector<std::size_t>& idx) const {
  return standardizer.apply(frontend::encode(dae, frontend::preprocess_frames(frames, idx, fe)));
}

Classification Pipeline::classify_frame(const waveform::Samples& samples) const {
  return classify(model, features(samples));
}

void Pipeline::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  nn::save_file(dae.net, dir + "/dae.nn");
  nn::save_file(model.net, dir + "/classifier.nn");
  std::ofstream out(dir + "/frontend.txt");
  if (!out) throw std::runtime_error("cannot write " + dir + "/frontend.txt");
  out.precision(17);
  out << "deepwifi-frontend 1\n";
  out << fe.adc_bits << ' ' << fe.band_low << ' ' << fe.band_high << ' ' << fe.sample_rate << ' ' << fe.fir_taps << ' '
      << fe.full_scale << ' ' << dae.encoder_layers << '\n';
  out << standardizer.mean.size() << '\n';
  for (Eigen::Index i = 0; i < standardizer.mean.size(); ++i) out << standardizer.mean[i] << ' ' << standardizer.scale[i] << '\n';
}

Pipeline Pipeline::load(const std::string& dir) {
  Pipeline p;
  p.dae.net = nn::load_file(dir + "/dae.nn");
  p.model.net = nn::load_file(dir + "/classifier.nn");
  std::ifstream in(dir + "/frontend.txt");
  if (!in) throw std::runtime_error("cannot read " + dir + "/frontend.txt");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "deepwifi-frontend" || version != 1) throw std::runtime_error("bad frontend file");
  Eigen::Index dim = 0;
  in >> p.fe.adc_bits >> p.fe.band_low >> p.fe.band_high >> p.fe.sample_rate >> p.fe.fir_taps >> p.fe.full_scale >>
      p.dae.encoder_layers >> dim;
  p.standardizer.mean.resize(dim);
  p.standardizer.scale.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) in >> p.standardizer.mean[i] >> p.standardizer.scale[i];
  if (!in) throw std::runtime_error("truncated frontend file");
  return p;
}

std::vector<Label> labels_of(const waveform::Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<Label> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(ds.frames.at(i).label);
  return out;
}

PipelineReport train_pipeline(const waveform::Dataset& ds, const frontend::FrontEndConfig& fe,
                              const frontend::DaeConfig& dae_cfg, const ClassifierConfig& clf_cfg) {
  fe.validate();
  PipelineReport rep;
  rep.pipeline.fe = fe;
  const Matrix train_x = frontend::preprocess_frames(ds.frames, ds.train, fe);
  const Matrix test_x = frontend::preprocess_frames(ds.frames, ds.test, fe);
  auto dae = frontend::train_dae(train_x, test_x, dae_cfg);
  rep.pipeline.dae = std::move(dae.dae);
  rep.dae_history = std::move(dae.history);
  rep.dae_relative_mse_test = frontend::relative_mse(test_x, frontend::reconstruct(rep.pipeline.dae, test_x));

  const Matrix train_latent = frontend::encode(rep.pipeline.dae, train_x);
  rep.pipeline.standardizer = frontend::Standardizer::fit(train_latent);
  const Matrix train_f = rep.pipeline.standardizer.apply(train_latent);
  const Matrix test_f = rep.pipeline.standardizer.apply(frontend::encode(rep.pipeline.dae, test_x));
  const auto train_labels = labels_of(ds, ds.train);
  const auto test_labels = labels_of(ds, ds.test);
  auto clf = train_fnn(train_f, train_labels, test_f, test_labels, clf_cfg);
  rep.pipeline.model = std::move(clf.model);
  rep.classifier_history = std::move(clf.history);
  rep.confusion_test = confusion(rep.pipeline.model, test_f, test_labels);
  rep.test_accuracy = accuracy(rep.confusion_test);
  return rep;
}

}  // namespace deepwifi::classifier
