#pragma once

#include "graspforge/depthproc/image.hpp"
#include "graspforge/sampler/sampler.hpp"
#include "graspforge/scene/render.hpp"
#include "graspforge/scene/scene.hpp"
#include "graspforge/simlab/oracle.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace graspforge {

/// Everything needed to rebuild a randomized scene from its seed.
struct SceneGenConfig {
  BinSpec bin;
  Camera camera;
  CableSpec cable;
  DecomposeOptions decompose;
  SettleOptions settle;
  int library_size = 24;
  std::uint64_t library_seed = 1;
  int min_cables = 1;
  int max_cables = 12;
  double friction_min = 0.1;
  double friction_max = 0.5;
  double gauss_sigma_max = 0.5;       // per-scene sigma ~ U[0, max], mm
  double salt_pepper_frac_max = 0.01; // per-scene fraction ~ U[0, max]

  /// Throws InvalidArgument.
  void validate() const;
};

/// Cable models shared by all scenes of a run.
std::vector<CableModelPtr> build_library(const SceneGenConfig& cfg, int jobs = 1);

/// Randomized scene: cable count, models, settle seed and friction all drawn
/// from `scene_seed`.
struct GeneratedScene {
  Scene scene;
  double friction = 0.5;
  std::uint64_t seed = 0;
};

GeneratedScene generate_scene(const SceneGenConfig& cfg, const std::vector<CableModelPtr>& library,
                              std::uint64_t scene_seed, int cable_count = -1);

/// Rendered depth with this scene's noise draw `attempt` (0-based).
DepthImage observe(const SceneGenConfig& cfg, const GeneratedScene& gs, int attempt);

/// Samples with up to `max_attempts` fresh noise draws; NoCandidates
/// propagates after the last one. `image_out` receives the observation used.
std::vector<GraspCandidate> sample_scene(const SceneGenConfig& cfg, const GeneratedScene& gs,
                                         const SamplerConfig& sampler, int max_attempts = 10,
                                         DepthImage* image_out = nullptr);

/// Sampler settings that match a scene config's camera, restricted to the bin interior.
SamplerConfig sampler_for(const SceneGenConfig& cfg, SamplerConfig base);

inline SamplerConfig with_n(int n) {
  SamplerConfig s;
  s.n = n;
  return s;
}

struct DatasetConfig {
  SceneGenConfig scenes;
  SamplerConfig sampler = with_n(10);  // n is the number of grasps kept per scene
  GripperModel gripper;
  int scene_count = 300;        // scenes to generate, or the scene budget when target_samples > 0
  int target_samples = 2000;    // > 0: stop once this many samples exist and truncate to it
  std::uint64_t seed = 42;
};

struct SampleMeta {
  std::uint64_t patch_offset = 0;
  int patch_size_px = 0;
  int label = 0;
  std::uint64_t scene_seed = 0;
  int scene_index = 0;
  int candidate_index = 0;
  int cable_count = 0;
  GraspPose pose;
  double f = 0.0;
  FailureReason reason = FailureReason::none;
  std::vector<int> contacted_ids;
};

struct GraspSample {
  Patch patch;
  int label = 0;
  SampleMeta meta;
};

struct DatasetSummary {
  int scenes = 0;
  int samples = 0;
  int positives = 0;
  int negatives = 0;
  int skipped_overfilled = 0;
  int skipped_no_candidates = 0;
  std::map<std::string, int> reasons;

  std::string to_json() const;
};

struct Dataset {
  std::vector<GraspSample> samples;
  DatasetSummary summary;
};

/// Oracle labels for one scene's candidates, in candidate order.
std::vector<GraspSample> label_scene(const GeneratedScene& gs, std::vector<GraspCandidate> candidates,
                                     const GripperModel& gripper, int scene_index);

/// One scene's contribution to a dataset.
struct SceneSamples {
  std::vector<GraspSample> samples;
  bool overfilled = false;
  bool no_candidates = false;
};

/// Appends a scene (scenes must arrive in index order), truncating at
/// `target_samples` when it is > 0. Returns false once the target is reached;
/// later scenes are then ignored and not counted.
bool append_scene(Dataset& ds, SceneSamples&& scene, int target_samples);

/// Per scene: generate, observe, sample, label every candidate. Scenes run in
/// parallel with seeds derived from the master seed and are concatenated in
/// scene order, so the result does not depend on `jobs`. With a sample
/// target, scenes are processed in order until the target is reached; the
/// summary then counts only the scenes that were used.
Dataset generate_dataset(const DatasetConfig& cfg, int jobs = 1);

/// Per-scene seed used by generate_dataset.
std::uint64_t dataset_scene_seed(std::uint64_t master, int index);

/// <stem>.idx (JSON lines), <stem>.bin (GFD1 patches) and <stem>.summary.json.
void write_dataset(const Dataset& ds, const std::filesystem::path& index_path);

/// Throws DatasetNotFound when the index or blob is missing.
Dataset read_dataset(const std::filesystem::path& index_path);

/// Inverse-frequency class weights normalized to mean 1. Throws SingleClass.
std::array<double, 2> class_weights(int negatives, int positives);
std::array<double, 2> class_weights(const std::vector<GraspSample>& samples);

}  // namespace graspforge
