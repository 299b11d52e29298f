#pragma once

#include "graspforge/model/net.hpp"
#include "graspforge/simlab/dataset.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace graspforge {

/// Original plus the three flipped copies, labels and metadata unchanged.
std::vector<GraspSample> augment(const GraspSample& sample);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  AdamConfig adam;
  double val_fraction = 0.2;
  bool augment = true;  // each training draw uses a random flip variant
  std::uint64_t seed = 0;
  int input_size = 0;  // 0: taken from the dataset's patches

  /// Throws InvalidArgument.
  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double val_prec = 0.0;
  double val_rec = 0.0;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Per-label shuffle; round(val_fraction * class size) of each class goes to
/// validation, keeping at least one of each class on both sides when possible.
Split stratified_split(const std::vector<GraspSample>& samples, double val_fraction, Rng& rng);

struct BinaryMetrics {
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when nothing is predicted positive
  double recall = 0.0;     // 0 when there are no positives
};

/// Threshold q >= 0.5.
BinaryMetrics evaluate_net(const QualityNet& net, const std::vector<GraspSample>& samples,
                           const std::vector<std::size_t>& indices, int jobs = 1);

struct TrainResult {
  QualityNet net;  // parameters from the epoch with the best validation accuracy
  std::vector<EpochMetrics> log;
  int best_epoch = 0;
  std::array<double, 2> phi{1.0, 1.0};
  Split split;
};

/// Shuffled minibatch Adam on the class-weighted loss, with weights from the
/// training split. Epoch train loss is the sample-weighted mean over the
/// epoch's minibatches. Throws SingleClass when the training split lacks a label.
TrainResult train(const std::vector<GraspSample>& samples, const TrainConfig& cfg, int jobs = 1);

/// CSV with header epoch,train_loss,val_acc,val_prec,val_rec.
void write_metrics_csv(const std::vector<EpochMetrics>& log, const std::filesystem::path& path);
std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

}  // namespace graspforge
