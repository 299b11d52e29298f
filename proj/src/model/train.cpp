#include "graspforge/model/train.hpp"

#include "graspforge/depthproc/process.hpp"
#include "graspforge/error.hpp"
#include "graspforge/io.hpp"
#include "graspforge/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace graspforge {

namespace {

enum : std::uint64_t { kSplitStream = 1, kInitStream = 2, kShuffleStream = 3 };

Patch flip_variant(const Patch& p, int k) {
  switch (k) {
    case 1: return flip_horizontal(p);
    case 2: return flip_vertical(p);
    case 3: return flip_vertical(flip_horizontal(p));
    default: return p;
  }
}

}  // namespace

std::vector<GraspSample> augment(const GraspSample& sample) {
  std::vector<GraspSample> out;
  for (auto& p : flip_variants(sample.patch)) {
    GraspSample s = sample;
    s.patch = std::move(p);
    out.push_back(std::move(s));
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw Error("InvalidArgument", "epochs and batch_size must be >= 1");
  if (!(adam.lr >= 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.eps > 0.0)) {
    throw Error("InvalidArgument", "bad optimizer settings");
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw Error("InvalidArgument", "val_fraction must be in (0, 1)");
  if (input_size < 0) throw Error("InvalidArgument", "input_size must be >= 0");
}

Split stratified_split(const std::vector<GraspSample>& samples, double val_fraction, Rng& rng) {
  Split split;
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].label == label) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, idx.size() - 1);
    split.val.insert(split.val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

BinaryMetrics evaluate_net(const QualityNet& net, const std::vector<GraspSample>& samples,
                           const std::vector<std::size_t>& indices, int jobs) {
  std::vector<int> predicted(indices.size());
  parallel_for(indices.size(), jobs, [&](std::size_t k) {
    predicted[k] = forward(net, samples[indices[k]].patch) >= 0.5 ? 1 : 0;
  });
  int tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int y = samples[indices[k]].label;
    if (predicted[k] == 1) {
      (y == 1 ? tp : fp)++;
    } else {
      (y == 0 ? tn : fn)++;
    }
  }
  BinaryMetrics m;
  if (!indices.empty()) m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(indices.size());
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / (tp + fn);
  return m;
}

TrainResult train(const std::vector<GraspSample>& samples, const TrainConfig& cfg, int jobs) {
  cfg.validate();
  if (samples.empty()) throw Error("SingleClass", "empty dataset");
  const int size = cfg.input_size > 0 ? cfg.input_size : samples.front().patch.width;
  for (const auto& s : samples) {
    if (s.patch.width != size || s.patch.height != size) {
      throw Error("ShapeMismatch", fmt::format("patch {}x{} in a {}x{} dataset", s.patch.width, s.patch.height, size, size));
    }
  }

  TrainResult result;
  Rng split_rng(derive_seed(cfg.seed, kSplitStream));
  result.split = stratified_split(samples, cfg.val_fraction, split_rng);
  int pos = 0;
  for (std::size_t i : result.split.train) pos += samples[i].label == 1;
  result.phi = class_weights(static_cast<int>(result.split.train.size()) - pos, pos);

  Rng init_rng(derive_seed(cfg.seed, kInitStream));
  QualityNet net = make_quality_net(size, init_rng);
  result.net = net;
  AdamState adam;
  Rng rng(derive_seed(cfg.seed, kShuffleStream));
  std::vector<std::size_t> order = result.split.train;
  double best_acc = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Patch> patches;
      patches.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const int variant = cfg.augment ? uniform_int(rng, 0, 3) : 0;
        patches.push_back(flip_variant(samples[order[k]].patch, variant));
      }
      std::vector<LabeledPatch> batch;
      for (std::size_t k = start; k < end; ++k) batch.push_back({&patches[k - start], samples[order[k]].label});
      const Gradients g = gradients(net, batch, result.phi, jobs);
      adam_step(net, adam, g.grad, cfg.adam);
      loss_sum += g.loss * static_cast<double>(batch.size());
    }
    const BinaryMetrics m = evaluate_net(net, samples, result.split.val, jobs);
    result.log.push_back({epoch, loss_sum / static_cast<double>(order.size()), m.accuracy, m.precision, m.recall});
    if (m.accuracy > best_acc) {
      best_acc = m.accuracy;
      result.best_epoch = epoch;
      result.net = net;
    }
  }
  return result;
}

void write_metrics_csv(const std::vector<EpochMetrics>& log, const std::filesystem::path& path) {
  std::string out = "epoch,train_loss,val_acc,val_prec,val_rec\n";
  for (const auto& e : log) out += fmt::format("{},{},{},{},{}\n", e.epoch, e.train_loss, e.val_acc, e.val_prec, e.val_rec);
  write_file_atomic(path, out);
}

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path, "MetricsNotFound"));
  std::string line;
  std::vector<EpochMetrics> out;
  if (!std::getline(in, line) || line.rfind("epoch,", 0) != 0) throw Error("InvalidMetrics", "missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochMetrics e;
    char c1, c2, c3, c4;
    std::istringstream row(line);
    if (!(row >> e.epoch >> c1 >> e.train_loss >> c2 >> e.val_acc >> c3 >> e.val_prec >> c4 >> e.val_rec)) {
      throw Error("InvalidMetrics", "bad row: " + line);
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace graspforge
