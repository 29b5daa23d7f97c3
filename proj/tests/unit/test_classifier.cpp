#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "deepwifi/classifier.hpp"

using namespace deepwifi;
using namespace deepwifi::classifier;

namespace {

struct Blobs {
  Matrix x;
  std::vector<Label> y;
};

Blobs blobs(int per_class, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::normal_distribution<double> g(0.0, 0.6);
  Blobs b;
  b.x.resize(4, 3 * per_class);
  for (int i = 0; i < 3 * per_class; ++i) {
    const int c = i % 3;
    for (int r = 0; r < 4; ++r) b.x(r, i) = g(rng) + (r == c ? 2.0 : 0.0);
    b.y.push_back(static_cast<Label>(c));
  }
  return b;
}

}  // namespace

TEST_CASE("argmax ties go to the lower class") {
  Vector p(3);
  p << 0.4, 0.4, 0.2;
  CHECK(argmax_label(p) == Label::I);
  p << 0.2, 0.4, 0.4;
  CHECK(argmax_label(p) == Label::W);
  p << 1.0 / 3, 1.0 / 3, 1.0 / 3;
  CHECK(argmax_label(p) == Label::I);
}

TEST_CASE("classifier trains on separable blobs") {
  const Blobs tr = blobs(100, 1);
  const Blobs te = blobs(40, 2);
  ClassifierConfig cfg;
  auto res = train_fnn(tr.x, tr.y, te.x, te.y, cfg);
  CHECK(res.model.net.output_dim() == 3);
  CHECK(res.model.net.layer(0).spec.output_dim == 15);
  CHECK(res.model.net.layer(0).spec.dropout_prob == 0.5);
  const Matrix cm = confusion(res.model, te.x, te.y);
  CHECK(cm.sum() == doctest::Approx(1.0));
  CHECK(accuracy(cm) > 0.9);
  CHECK(res.history.back().train_accuracy >= res.history.back().test_accuracy - 0.05);

  const Classification c = classify(res.model, te.x.col(0));
  CHECK(c.probabilities[0] + c.probabilities[1] + c.probabilities[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(classify(res.model, te.x.col(0)).label == c.label);
  const auto batch = classify_batch(res.model, te.x);
  for (Eigen::Index i = 0; i < te.x.cols(); ++i) CHECK(batch[static_cast<std::size_t>(i)].label == classify(res.model, te.x.col(i)).label);
}

TEST_CASE("adding a constant to all logits keeps the label") {
  ClassifierModel m;
  m.net = build_classifier(4, ClassifierConfig{});
  const Blobs b = blobs(5, 3);
  for (Eigen::Index i = 0; i < b.x.cols(); ++i) {
    Vector z = m.net.forward_prefix(b.x.col(i), 1);
    Vector logits = m.net.layer(1).weights * z + m.net.layer(1).bias;
    Vector shifted = logits.array() + 7.5;
    CHECK(argmax_label(nn::activate(nn::Activation::softmax, logits)) ==
          argmax_label(nn::activate(nn::Activation::softmax, shifted)));
  }
}

TEST_CASE("linear variant and recall") {
  ClassifierConfig cfg;
  cfg.hidden = 0;
  auto net = build_classifier(3, cfg);
  CHECK(net.num_layers() == 1);
  Matrix cm(3, 3);
  cm << 0.3, 0.03, 0.0, 0.0, 0.33, 0.0, 0.0, 0.03, 0.31;
  auto r = recall(cm);
  CHECK(r[0] == doctest::Approx(0.3 / 0.33));
  CHECK(r[1] == doctest::Approx(1.0));
  CHECK(accuracy(cm) == doctest::Approx(0.94));
}

TEST_CASE("pipeline save and load round trip") {
  waveform::DatasetConfig dc;
  dc.n_per_class = 15;
  dc.n_samples = 448;
  auto ds = waveform::make_dataset(dc, 3);
  frontend::DaeConfig dae;
  dae.hidden = {32, 8, 32};
  dae.epochs = 2;
  ClassifierConfig cc;
  cc.epochs = 5;
  auto rep = train_pipeline(ds, frontend::FrontEndConfig{}, dae, cc);
  CHECK(rep.confusion_test.sum() == doctest::Approx(1.0));
  CHECK(rep.dae_history.size() == 3);
  const auto dir = std::filesystem::temp_directory_path() / "deepwifi_pipeline_test";
  rep.pipeline.save(dir.string());
  Pipeline back = Pipeline::load(dir.string());
  const auto& s = ds.frames[ds.test[0]].samples;
  CHECK(back.features(s) == rep.pipeline.features(s));
  CHECK(back.classify_frame(s).label == rep.pipeline.classify_frame(s).label);
  std::filesystem::remove_all(dir);
}
