#include "graspforge/cli/run_config.hpp"

#include "graspforge/error.hpp"
#include "graspforge/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

namespace graspforge {

EvalConfig Settings::eval_config() const {
  EvalConfig e;
  e.scenes = dataset.scenes;
  e.scenes.min_cables = eval_min_cables;
  e.scenes.max_cables = eval_max_cables;
  e.sampler = dataset.sampler;
  e.sampler.n = eval_candidates;
  e.gripper = dataset.gripper;
  e.trials = eval_trials;
  e.seed = derive_seed(seed, 0xE7A1);
  return e;
}

DatasetConfig Settings::dataset_config() const {
  DatasetConfig d = dataset;
  d.seed = seed;
  return d;
}

TrainConfig Settings::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw Error("InvalidConfig", fmt::format("{}: '{}' is not a valid number", key, text));
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || !std::isfinite(v)) {
    throw Error("InvalidConfig", fmt::format("{}: '{}' is not a finite number", key, text));
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error("InvalidConfig", fmt::format("{}: '{}' is not true or false", key, text));
}

struct Entry {
  RunConfig::KeyInfo info;
  std::function<void(Settings&, const std::string&)> set;
  std::function<std::string(const Settings&)> get;
};

template <class T>
using Accessor = T& (*)(Settings&);

template <class T>
Entry entry(const char* key, const char* help, Accessor<T> field) {
  Entry e;
  e.info = {key, help};
  e.set = [field, key = std::string(key)](Settings& s, const std::string& v) {
    if constexpr (std::is_same_v<T, double>) {
      field(s) = parse_double(key, v);
    } else if constexpr (std::is_same_v<T, bool>) {
      field(s) = parse_bool(key, v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      field(s) = v;
    } else if constexpr (std::is_same_v<T, PolicyKind>) {
      if (v != "random" && v != "cgcnn") throw Error("InvalidConfig", fmt::format("{}: '{}' is not random or cgcnn", key, v));
      field(s) = policy_from_string(v);
    } else {
      field(s) = parse_number<T>(key, v);
    }
  };
  e.get = [field](const Settings& s) {
    const T& v = field(const_cast<Settings&>(s));
    if constexpr (std::is_same_v<T, bool>) {
      return std::string(v ? "true" : "false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, PolicyKind>) {
      return std::string(to_string(v));
    } else {
      return fmt::format("{}", v);
    }
  };
  return e;
}

#define GF_FIELD(T, expr) static_cast<Accessor<T>>([](Settings& s) -> T& { return expr; })

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t = {
        entry("seed", "master seed", GF_FIELD(std::uint64_t, s.seed)),
        entry("jobs", "worker threads (0: all hardware threads)", GF_FIELD(int, s.jobs)),
        entry("paths.mesh", "input mesh for decompose", GF_FIELD(std::string, s.paths.mesh)),
        entry("paths.decomposition", "output directory of decompose", GF_FIELD(std::string, s.paths.decomposition)),
        entry("paths.scenes", "scene directory written by make-scenes", GF_FIELD(std::string, s.paths.scenes)),
        entry("paths.candidates", "candidate index written by sample", GF_FIELD(std::string, s.paths.candidates)),
        entry("paths.dataset", "dataset index written by label", GF_FIELD(std::string, s.paths.dataset)),
        entry("paths.checkpoint", "network checkpoint written by train", GF_FIELD(std::string, s.paths.checkpoint)),
        entry("paths.metrics", "per-epoch metrics CSV written by train", GF_FIELD(std::string, s.paths.metrics)),
        entry("paths.stats", "stats JSON written by evaluate", GF_FIELD(std::string, s.paths.stats)),
        entry("paths.report", "output directory of report", GF_FIELD(std::string, s.paths.report)),
        entry("decompose.tol", "concavity tolerance", GF_FIELD(double, s.dataset.scenes.decompose.concavity_tol)),
        entry("decompose.max_pieces", "piece budget", GF_FIELD(int, s.dataset.scenes.decompose.max_pieces)),
        entry("decompose.cell_size", "voxel size, mm", GF_FIELD(double, s.dataset.scenes.decompose.cell_size)),
        entry("bin.inner_x", "bin inner length, mm", GF_FIELD(double, s.dataset.scenes.bin.inner_x)),
        entry("bin.inner_y", "bin inner width, mm", GF_FIELD(double, s.dataset.scenes.bin.inner_y)),
        entry("bin.wall_height", "bin wall height, mm", GF_FIELD(double, s.dataset.scenes.bin.wall_height)),
        entry("cable.segment_count", "segments per cable", GF_FIELD(int, s.dataset.scenes.cable.segment_count)),
        entry("cable.segment_length", "segment length, mm", GF_FIELD(double, s.dataset.scenes.cable.segment_length)),
        entry("cable.radius", "cable radius, mm", GF_FIELD(double, s.dataset.scenes.cable.radius)),
        entry("cable.bend_min_deg", "smallest joint bend, degrees", GF_FIELD(double, s.dataset.scenes.cable.bend_min_deg)),
        entry("cable.bend_max_deg", "largest joint bend, degrees", GF_FIELD(double, s.dataset.scenes.cable.bend_max_deg)),
        entry("camera.pitch", "mm per pixel", GF_FIELD(double, s.dataset.scenes.camera.pitch)),
        entry("camera.width", "image width, px", GF_FIELD(int, s.dataset.scenes.camera.width)),
        entry("camera.height_px", "image height, px", GF_FIELD(int, s.dataset.scenes.camera.height_px)),
        entry("scenes.library_size", "distinct cable shapes", GF_FIELD(int, s.dataset.scenes.library_size)),
        entry("scenes.min_cables", "fewest cables per training scene", GF_FIELD(int, s.dataset.scenes.min_cables)),
        entry("scenes.max_cables", "most cables per training scene", GF_FIELD(int, s.dataset.scenes.max_cables)),
        entry("scenes.friction_min", "lowest scene friction", GF_FIELD(double, s.dataset.scenes.friction_min)),
        entry("scenes.friction_max", "highest scene friction", GF_FIELD(double, s.dataset.scenes.friction_max)),
        entry("scenes.gauss_sigma_max", "largest depth noise sigma, mm", GF_FIELD(double, s.dataset.scenes.gauss_sigma_max)),
        entry("scenes.salt_pepper_frac_max", "largest dropout fraction", GF_FIELD(double, s.dataset.scenes.salt_pepper_frac_max)),
        entry("sampler.n", "grasps kept per training scene", GF_FIELD(int, s.dataset.sampler.n)),
        entry("sampler.w_max", "widest grasp, mm", GF_FIELD(double, s.dataset.sampler.w_max)),
        entry("sampler.f", "friction assumed by the sampler", GF_FIELD(double, s.dataset.sampler.f)),
        entry("sampler.depth_pair_tol", "contact depth mismatch limit, mm", GF_FIELD(double, s.dataset.sampler.depth_pair_tol)),
        entry("sampler.grad_threshold", "edge threshold, mm/px", GF_FIELD(double, s.dataset.sampler.grad_threshold)),
        entry("sampler.normal_radius", "normal estimation radius, px", GF_FIELD(double, s.dataset.sampler.normal_radius)),
        entry("sampler.max_trials", "pair draws per image", GF_FIELD(int, s.dataset.sampler.max_trials)),
        entry("sampler.patch_size", "patch side, px", GF_FIELD(int, s.dataset.sampler.patch_size)),
        entry("sampler.patch_step", "source px per patch px", GF_FIELD(double, s.dataset.sampler.patch_step)),
        entry("gripper.jaw_thickness", "jaw thickness, mm", GF_FIELD(double, s.dataset.gripper.jaw_thickness)),
        entry("gripper.jaw_width", "jaw width, mm", GF_FIELD(double, s.dataset.gripper.jaw_width)),
        entry("gripper.finger_length", "finger length, mm", GF_FIELD(double, s.dataset.gripper.finger_length)),
        entry("gripper.open_clearance", "extra opening beyond the grasp width, mm", GF_FIELD(double, s.dataset.gripper.open_clearance)),
        entry("gripper.lift_height", "lift distance, mm", GF_FIELD(double, s.dataset.gripper.lift_height)),
        entry("dataset.scene_count", "scenes made (scene budget when a sample target is set)", GF_FIELD(int, s.dataset.scene_count)),
        entry("dataset.target_samples", "dataset size (0: keep every sample)", GF_FIELD(int, s.dataset.target_samples)),
        entry("train.epochs", "training epochs", GF_FIELD(int, s.train.epochs)),
        entry("train.batch_size", "minibatch size", GF_FIELD(int, s.train.batch_size)),
        entry("train.lr", "Adam learning rate", GF_FIELD(double, s.train.adam.lr)),
        entry("train.val_fraction", "held-out fraction", GF_FIELD(double, s.train.val_fraction)),
        entry("train.augment", "random flips during training", GF_FIELD(bool, s.train.augment)),
        entry("policy.kind", "random or cgcnn", GF_FIELD(PolicyKind, s.policy.kind)),
        entry("policy.lambda", "height bonus weight", GF_FIELD(double, s.policy.lambda)),
        entry("eval.trials", "evaluation trials", GF_FIELD(int, s.eval_trials)),
        entry("eval.min_cables", "fewest cables per evaluation scene", GF_FIELD(int, s.eval_min_cables)),
        entry("eval.max_cables", "most cables per evaluation scene", GF_FIELD(int, s.eval_max_cables)),
        entry("eval.candidates", "candidates offered to the policy per trial", GF_FIELD(int, s.eval_candidates)),
        entry("report.stats", "comma-separated stats files (empty: paths.stats)", GF_FIELD(std::string, s.report_stats)),
    };
    std::sort(t.begin(), t.end(), [](const Entry& a, const Entry& b) { return a.info.key < b.info.key; });
    return t;
  }();
  return table;
}

#undef GF_FIELD

const Entry& find_entry(const std::string& key) {
  const auto& t = entries();
  auto it = std::lower_bound(t.begin(), t.end(), key, [](const Entry& e, const std::string& k) { return e.info.key < k; });
  if (it == t.end() || it->info.key != key) throw Error("InvalidConfig", "unknown key " + key);
  return *it;
}

}  // namespace

const std::vector<RunConfig::KeyInfo>& RunConfig::keys() {
  static const std::vector<KeyInfo> out = [] {
    std::vector<KeyInfo> k;
    for (const auto& e : entries()) k.push_back(e.info);
    return k;
  }();
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const Entry& e = find_entry(key);
  e.set(settings_, value);
}

std::string RunConfig::get(const std::string& key) const { return find_entry(key).get(settings_); }

void RunConfig::merge_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line, section;
  for (int number = 1; std::getline(in, line); ++number) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto where = [&] { return fmt::format("{}:{}", source, number); };
    if (line.front() == '[') {
      if (line.back() != ']') throw Error("InvalidConfig", where() + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("InvalidConfig", where() + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    try {
      set(key, value);
    } catch (const Error& e) {
      throw Error("InvalidConfig", where() + ": " + e.what());
    }
  }
}

void RunConfig::load(const std::filesystem::path& path) { merge_text(read_file(path, "ConfigNotFound"), path.string()); }

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& e : entries()) {
    const std::string v = e.get(settings_);
    const bool quote = v.empty() || v.find_first_of(" #=\"") != std::string::npos;
    out += fmt::format("{} = {}\n", e.info.key, quote ? "\"" + v + "\"" : v);
  }
  return out;
}

}  // namespace graspforge
