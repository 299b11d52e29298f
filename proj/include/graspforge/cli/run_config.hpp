#pragma once

#include "graspforge/model/train.hpp"
#include "graspforge/policy/policy.hpp"
#include "graspforge/simlab/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace graspforge {

struct RunPaths {
  std::string mesh;
  std::string decomposition = "pieces";
  std::string scenes = "scenes";
  std::string candidates = "candidates.json";
  std::string dataset = "dataset.idx";
  std::string checkpoint = "model.gfqn";
  std::string metrics = "metrics.csv";
  std::string stats = "stats.json";
  std::string report = "report";
};

/// Every tunable of a pipeline run. Scene, sampler and gripper settings live
/// in `dataset` and are shared with evaluation.
struct Settings {
  std::uint64_t seed = 42;
  int jobs = 0;  // 0: all hardware threads
  RunPaths paths;
  DatasetConfig dataset;
  TrainConfig train;
  PolicyConfig policy;
  int eval_trials = 200;
  int eval_min_cables = 5;
  int eval_max_cables = 15;
  int eval_candidates = 100;
  std::string report_stats;  // comma-separated stats files; empty: paths.stats

  /// `dataset` with the master seed applied.
  DatasetConfig dataset_config() const;
  /// Evaluation setup derived from the shared scene settings.
  EvalConfig eval_config() const;
  TrainConfig train_config() const;
};

/// Settings as flat `key = value` pairs. Text form is TOML-like: one pair per
/// line, `#` comments, optional double quotes around values, and `[section]`
/// headers that prefix the following keys with `section.`.
class RunConfig {
 public:
  struct KeyInfo {
    std::string key;
    std::string help;
  };

  static const std::vector<KeyInfo>& keys();

  /// Throws InvalidConfig for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Throws InvalidConfig with the source name and line number.
  void merge_text(const std::string& text, const std::string& source = "config");
  /// Throws ConfigNotFound.
  void load(const std::filesystem::path& path);
  /// All keys, one `key = value` line each, in key order.
  std::string to_text() const;

  Settings& settings() { return settings_; }
  const Settings& settings() const { return settings_; }

 private:
  Settings settings_;
};

}  // namespace graspforge
