#pragma once

// Idle / WiFi / jammer classification of autoencoder features, and the full
// frame -> label pipeline that simulated users share.

#include <array>
#include <string>
#include <vector>

#include "deepwifi/frontend.hpp"
#include "deepwifi/nn.hpp"
#include "deepwifi/waveform.hpp"

namespace deepwifi::classifier {

using nn::Matrix;
using nn::Vector;
using waveform::Label;

struct ClassifierConfig {
  std::size_t hidden = 15;  // 0 gives a linear softmax model
  double dropout = 0.5;
  double lr = 1e-2;
  std::size_t epochs = 100;
  std::size_t patience = 10;
  std::size_t batch = 16;
  std::uint64_t seed = 1;
};

struct ClassifierModel {
  nn::Network net;
};

struct EpochMetrics {
  std::size_t epoch;
  double train_loss;
  double train_accuracy;
  double test_loss;
  double test_accuracy;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;
};

nn::Network build_classifier(std::size_t input_dim, const ClassifierConfig& cfg);

/// Columns of `features` are samples. Keeps the weights of the epoch with the
/// lowest test loss; stops after `patience` epochs without improvement.
TrainResult train_fnn(const Matrix& train_features, const std::vector<Label>& train_labels,
                      const Matrix& test_features, const std::vector<Label>& test_labels,
                      const ClassifierConfig& cfg);

struct Classification {
  Label label;
  std::array<double, 3> probabilities;
};

/// Argmax of the softmax output; ties go to the lower class index.
Classification classify(const ClassifierModel& model, const Vector& feature);
std::vector<Classification> classify_batch(const ClassifierModel& model, const Matrix& features);

Label argmax_label(const Vector& probabilities);

/// Rows = true label, columns = predicted; entries sum to 1.
Matrix confusion(const ClassifierModel& model, const Matrix& features, const std::vector<Label>& labels);
double accuracy(const Matrix& confusion_matrix);
/// Per-class recall from a normalized confusion matrix.
std::array<double, 3> recall(const Matrix& confusion_matrix);

void save_history_csv(const std::vector<EpochMetrics>& history, const std::string& path);
void save_confusion_csv(const Matrix& confusion_matrix, const std::string& path);

/// Front end + autoencoder + standardizer + classifier.
struct Pipeline {
  frontend::FrontEndConfig fe;
  frontend::Dae dae;
  frontend::Standardizer standardizer;
  ClassifierModel model;

  Vector features(const waveform::Samples& samples) const;
  Matrix features(const std::vector<waveform::IqFrame>& frames, const std::vector<std::size_t>& idx) const;
  Classification classify_frame(const waveform::Samples& samples) const;

  void save(const std::string& dir) const;
  static Pipeline load(const std::string& dir);
};

struct PipelineReport {
  Pipeline pipeline;
  std::vector<frontend::LossRecord> dae_history;
  std::vector<EpochMetrics> classifier_history;
  double dae_relative_mse_test = 0.0;
  Matrix confusion_test;
  double test_accuracy = 0.0;
};

std::vector<Label> labels_of(const waveform::Dataset& ds, const std::vector<std::size_t>& idx);

PipelineReport train_pipeline(const waveform::Dataset& ds, const frontend::FrontEndConfig& fe,
                              const frontend::DaeConfig& dae_cfg, const ClassifierConfig& clf_cfg);

}  // namespace deepwifi::classifier
