#include "graspforge/simlab/dataset.hpp"

#include "graspforge/depthproc/process.hpp"
#include "graspforge/error.hpp"
#include "graspforge/io.hpp"
#include "graspforge/parallel.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <sstream>

namespace graspforge {

namespace {

enum : std::uint64_t { kComposition = 1, kSettle = 2, kNoise = 3, kSampler = 4, kScene = 0x5CE7E };

std::filesystem::path with_suffix(const std::filesystem::path& index, const std::string& suffix) {
  std::filesystem::path p = index;
  p.replace_extension(suffix);
  return p;
}

}  // namespace

void SceneGenConfig::validate() const {
  if (library_size < 1) throw Error("InvalidArgument", "library_size must be >= 1");
  if (min_cables < 1 || max_cables < min_cables) throw Error("InvalidArgument", "cable count range is empty");
  if (!(friction_min > 0.0 && friction_max >= friction_min)) throw Error("InvalidArgument", "bad friction range");
  if (!(gauss_sigma_max >= 0.0) || !(salt_pepper_frac_max >= 0.0 && salt_pepper_frac_max <= 0.1)) {
    throw Error("InvalidArgument", "noise parameters out of range");
  }
  camera.validate();
  cable.validate();
}

std::vector<CableModelPtr> build_library(const SceneGenConfig& cfg, int jobs) {
  return build_cable_library(cfg.cable, cfg.library_size, cfg.library_seed, cfg.decompose, jobs);
}

GeneratedScene generate_scene(const SceneGenConfig& cfg, const std::vector<CableModelPtr>& library,
                              std::uint64_t scene_seed, int cable_count) {
  Rng rng(derive_seed(scene_seed, kComposition));
  const int count = cable_count > 0 ? cable_count : uniform_int(rng, cfg.min_cables, cfg.max_cables);
  std::vector<CableModelPtr> cables;
  for (int i = 0; i < count; ++i) cables.push_back(library[uniform_int(rng, 0, static_cast<int>(library.size()) - 1)]);
  GeneratedScene out;
  out.seed = scene_seed;
  out.friction = uniform(rng, cfg.friction_min, cfg.friction_max);
  out.scene = settle_scene(cfg.bin, cables, derive_seed(scene_seed, kSettle), cfg.settle);
  out.scene.seed = scene_seed;
  return out;
}

DepthImage observe(const SceneGenConfig& cfg, const GeneratedScene& gs, int attempt) {
  Rng rng(derive_seed(gs.seed, kNoise, static_cast<std::uint64_t>(attempt)));
  const double sigma = uniform(rng, 0.0, cfg.gauss_sigma_max);
  const double frac = uniform(rng, 0.0, cfg.salt_pepper_frac_max);
  return add_noise(render_depth(gs.scene, cfg.camera).depth, rng, sigma, frac, cfg.camera.height);
}

SamplerConfig sampler_for(const SceneGenConfig& cfg, SamplerConfig base) {
  base.frame.center = cfg.camera.center;
  base.frame.camera_height = cfg.camera.height;
  base.roi_max = Vec2(0.5 * cfg.bin.inner_x, 0.5 * cfg.bin.inner_y);
  base.roi_min = -base.roi_max;
  return base;
}

std::vector<GraspCandidate> sample_scene(const SceneGenConfig& cfg, const GeneratedScene& gs,
                                         const SamplerConfig& sampler, int max_attempts, DepthImage* image_out) {
  const SamplerConfig sc = sampler_for(cfg, sampler);
  for (int attempt = 0;; ++attempt) {
    DepthImage img = observe(cfg, gs, attempt);
    Rng rng(derive_seed(gs.seed, kSampler, static_cast<std::uint64_t>(attempt)));
    try {
      auto out = sample_grasps(img, sc, rng);
      if (image_out) *image_out = std::move(img);
      return out;
    } catch (const Error& e) {
      if (e.kind() != "NoCandidates" || attempt + 1 >= max_attempts) throw;
    }
  }
}

std::uint64_t dataset_scene_seed(std::uint64_t master, int index) {
  return derive_seed(master, kScene, static_cast<std::uint64_t>(index));
}

std::string DatasetSummary::to_json() const {
  nlohmann::json j = {{"scenes", scenes},
                      {"samples", samples},
                      {"positives", positives},
                      {"negatives", negatives},
                      {"skipped_overfilled", skipped_overfilled},
                      {"skipped_no_candidates", skipped_no_candidates},
                      {"reasons", reasons}};
  return j.dump(2);
}

std::vector<GraspSample> label_scene(const GeneratedScene& gs, std::vector<GraspCandidate> candidates,
                                     const GripperModel& gripper, int scene_index) {
  std::vector<GraspSample> out;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const GraspOutcome outcome = execute_grasp(gs.scene, candidates[k].pose, gripper, gs.friction);
    GraspSample s;
    s.patch = std::move(candidates[k].patch);
    s.label = outcome.label;
    s.meta.label = outcome.label;
    s.meta.patch_size_px = s.patch.width;
    s.meta.scene_seed = gs.seed;
    s.meta.scene_index = scene_index;
    s.meta.candidate_index = static_cast<int>(k);
    s.meta.cable_count = static_cast<int>(gs.scene.cables.size());
    s.meta.pose = candidates[k].pose;
    s.meta.f = gs.friction;
    s.meta.reason = outcome.reason;
    s.meta.contacted_ids = outcome.contacted_ids;
    out.push_back(std::move(s));
  }
  return out;
}

bool append_scene(Dataset& ds, SceneSamples&& scene, int target_samples) {
  auto full = [&] { return target_samples > 0 && static_cast<int>(ds.samples.size()) >= target_samples; };
  if (full()) return false;
  ++ds.summary.scenes;
  ds.summary.skipped_overfilled += scene.overfilled;
  ds.summary.skipped_no_candidates += scene.no_candidates;
  for (auto& s : scene.samples) {
    if (full()) break;
    (s.label == 1 ? ds.summary.positives : ds.summary.negatives)++;
    ds.summary.reasons[to_string(s.meta.reason)]++;
    ds.samples.push_back(std::move(s));
  }
  ds.summary.samples = static_cast<int>(ds.samples.size());
  return !full();
}

Dataset generate_dataset(const DatasetConfig& cfg, int jobs) {
  cfg.scenes.validate();
  cfg.sampler.validate();
  cfg.gripper.validate();
  if (cfg.scene_count < 1) throw Error("InvalidArgument", "scene_count must be >= 1");
  if (cfg.target_samples < 0) throw Error("InvalidArgument", "target_samples must be >= 0");
  const auto library = build_library(cfg.scenes, jobs);

  auto run_scene = [&](int i) {
    SceneSamples r;
    GeneratedScene gs;
    try {
      gs = generate_scene(cfg.scenes, library, dataset_scene_seed(cfg.seed, i));
    } catch (const Error& e) {
      if (e.kind() != "Overfilled") throw;
      r.overfilled = true;
      return r;
    }
    std::vector<GraspCandidate> cands;
    try {
      cands = sample_scene(cfg.scenes, gs, cfg.sampler);
    } catch (const Error& e) {
      if (e.kind() != "NoCandidates") throw;
      r.no_candidates = true;
      return r;
    }
    r.samples = label_scene(gs, std::move(cands), cfg.gripper, i);
    return r;
  };

  Dataset ds;
  const int workers = jobs <= 0 ? default_jobs() : jobs;
  const int block = cfg.target_samples > 0 ? std::max(1, 2 * workers) : cfg.scene_count;
  bool open = true;
  for (int first = 0; first < cfg.scene_count && open; first += block) {
    const int count = std::min(block, cfg.scene_count - first);
    std::vector<SceneSamples> results(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), jobs, [&](std::size_t k) { results[k] = run_scene(first + static_cast<int>(k)); });
    for (auto& r : results) {
      if (!(open = append_scene(ds, std::move(r), cfg.target_samples))) break;
    }
  }
  ds.summary.samples = static_cast<int>(ds.samples.size());
  return ds;
}

namespace {

nlohmann::json pose_json(const GraspPose& p) {
  return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"theta", p.theta}, {"w", p.w}};
}

GraspPose pose_from_json(const nlohmann::json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>(), j.at("theta").get<double>(),
          j.at("w").get<double>()};
}

}  // namespace

void write_dataset(const Dataset& ds, const std::filesystem::path& index_path) {
  std::string blob, index;
  for (const auto& s : ds.samples) {
    const std::uint64_t offset = blob.size();
    blob += encode_gfd1(s.patch);
    const auto& m = s.meta;
    nlohmann::json j = {{"patch_offset", offset},
                        {"patch_size_px", s.patch.width},
                        {"label", s.label},
                        {"scene_seed", m.scene_seed},
                        {"scene_index", m.scene_index},
                        {"candidate_index", m.candidate_index},
                        {"cable_count", m.cable_count},
                        {"pose", pose_json(m.pose)},
                        {"f", m.f},
                        {"reason", to_string(m.reason)},
                        {"contacted_ids", m.contacted_ids}};
    index += j.dump() + "\n";
  }
  write_file_atomic(with_suffix(index_path, ".bin"), blob);
  write_file_atomic(with_suffix(index_path, ".summary.json"), ds.summary.to_json() + "\n");
  write_file_atomic(index_path, index);
}

Dataset read_dataset(const std::filesystem::path& index_path) {
  const std::string index = read_file(index_path, "DatasetNotFound");
  const std::string blob = read_file(with_suffix(index_path, ".bin"), "DatasetNotFound");
  Dataset ds;
  std::istringstream lines(index);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      GraspSample s;
      auto& m = s.meta;
      m.patch_offset = j.at("patch_offset").get<std::uint64_t>();
      m.patch_size_px = j.at("patch_size_px").get<int>();
      m.label = s.label = j.at("label").get<int>();
      m.scene_seed = j.at("scene_seed").get<std::uint64_t>();
      m.scene_index = j.value("scene_index", 0);
      m.candidate_index = j.value("candidate_index", 0);
      m.cable_count = j.value("cable_count", 0);
      m.pose = pose_from_json(j.at("pose"));
      m.f = j.at("f").get<double>();
      m.reason = failure_from_string(j.at("reason").get<std::string>());
      if (j.contains("contacted_ids")) m.contacted_ids = j.at("contacted_ids").get<std::vector<int>>();
      s.patch = decode_gfd1(blob, m.patch_offset);
      if (s.patch.width != m.patch_size_px || s.patch.height != m.patch_size_px) {
        throw Error("InvalidDataset", fmt::format("line {}: patch size mismatch", line_no));
      }
      if (s.label != 0 && s.label != 1) throw Error("InvalidDataset", fmt::format("line {}: bad label", line_no));
      (s.label == 1 ? ds.summary.positives : ds.summary.negatives)++;
      ds.summary.reasons[to_string(m.reason)]++;
      ds.samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error("InvalidDataset", fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  ds.summary.samples = static_cast<int>(ds.samples.size());
  return ds;
}

std::array<double, 2> class_weights(int negatives, int positives) {
  if (negatives <= 0 || positives <= 0) throw Error("SingleClass", "both labels must be present");
  const double inv0 = 1.0 / negatives, inv1 = 1.0 / positives;
  const double mean = 0.5 * (inv0 + inv1);
  return {inv0 / mean, inv1 / mean};
}

std::array<double, 2> class_weights(const std::vector<GraspSample>& samples) {
  int pos = 0;
  for (const auto& s : samples) pos += s.label == 1;
  return class_weights(static_cast<int>(samples.size()) - pos, pos);
}

}  // namespace graspforge
