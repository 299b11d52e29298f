#include "graspforge/error.hpp"
#include "graspforge/io.hpp"
#include "graspforge/simlab/dataset.hpp"
#include "graspforge/simlab/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace graspforge;

namespace {

template <class F>
std::string error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

// Straight 108 mm cable of radius 4 along its local x axis.
CableModelPtr straight_cable() {
  static const CableModelPtr model = [] {
    CableSpec spec;
    spec.bend_min_deg = 0.0;
    spec.bend_max_deg = 0.0;
    return build_cable_model(spec, 0, 99, DecomposeOptions{});
  }();
  return model;
}

// Cable resting with its axis at height z, through (x, y), rotated by yaw.
PlacedCable lay(int id, double x, double y, double yaw, double z = 4.01) {
  Pose3 pose;
  pose.translation = Vec3(x, y, z);
  pose.rotation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  return PlacedCable::make(id, straight_cable(), pose);
}

Scene scene_of(std::vector<PlacedCable> cables, const BinSpec& bin = {}) {
  Scene s;
  s.bin = bin;
  s.bin_pieces = bin_pieces(bin);
  s.cables = std::move(cables);
  return s;
}

GraspPose grasp(double x, double y, double theta, double w = 8.0, double z = 1.0) { return {x, y, z, theta, w}; }

SceneGenConfig small_scenes() {
  SceneGenConfig cfg;
  cfg.library_size = 8;
  cfg.max_cables = 10;
  return cfg;
}

const std::vector<CableModelPtr>& library() {
  static const auto lib = build_library(small_scenes());
  return lib;
}

struct Labeled {
  GeneratedScene gs;
  std::vector<GraspCandidate> candidates;
};

// Scenes that settle and yield candidates, starting from `first_seed`.
std::vector<Labeled> labeled_scenes(int count, std::uint64_t first_seed, int per_scene) {
  SamplerConfig sc;
  sc.n = per_scene;
  std::vector<Labeled> out;
  for (std::uint64_t seed = first_seed; static_cast<int>(out.size()) < count; ++seed) {
    try {
      Labeled l;
      l.gs = generate_scene(small_scenes(), library(), seed);
      l.candidates = sample_scene(small_scenes(), l.gs, sc);
      out.push_back(std::move(l));
    } catch (const Error& e) {
      if (e.kind() != "Overfilled" && e.kind() != "NoCandidates") throw;
    }
  }
  return out;
}

}  // namespace

TEST(Oracle, PerpendicularGraspOnIsolatedCableSucceeds) {
  const Scene s = scene_of({lay(0, 0, 0, 0)});
  const auto out = execute_grasp(s, grasp(0, 0, M_PI / 2), GripperModel{}, 0.3);
  EXPECT_EQ(out.label, 1);
  EXPECT_EQ(out.reason, FailureReason::none);
  EXPECT_EQ(out.contacted_ids, std::vector<int>{0});
  // Jaws stop on the tube faces, one diameter apart (polygon flats are slightly inside).
  EXPECT_NEAR(out.closed_width, 8.0, 0.4);
}

TEST(Oracle, EmptySpaceGivesEmptyClose) {
  const Scene s = scene_of({lay(0, 0, 0, 0)});
  const auto out = execute_grasp(s, grasp(0, 50, M_PI / 2), GripperModel{}, 0.5);
  EXPECT_EQ(out.label, 0);
  EXPECT_EQ(out.reason, FailureReason::empty_close);
  EXPECT_TRUE(out.contacted_ids.empty());
}

TEST(Oracle, TwoCablesBetweenJawsIsMultiObject) {
  const Scene s = scene_of({lay(0, 0, -5, 0), lay(1, 0, 5, 0)});
  const auto out = execute_grasp(s, grasp(0, 0, M_PI / 2, 18.0), GripperModel{}, 0.5);
  EXPECT_EQ(out.label, 0);
  EXPECT_EQ(out.reason, FailureReason::multi_object);
  EXPECT_EQ(out.contacted_ids, (std::vector<int>{0, 1}));
}

TEST(Oracle, CableLyingAcrossTheTargetIsDraggedOnLift) {
  // Second cable crosses on top of the first, away from the jaws.
  const Scene s = scene_of({lay(0, 0, 0, 0), lay(1, 30, 0, M_PI / 2, 12.02)});
  const auto out = execute_grasp(s, grasp(0, 0, M_PI / 2), GripperModel{}, 0.5);
  EXPECT_EQ(out.label, 0);
  EXPECT_EQ(out.reason, FailureReason::multi_object);
  EXPECT_EQ(out.contacted_ids, (std::vector<int>{0, 1}));
  // Without the crossing cable the same grasp holds.
  EXPECT_EQ(execute_grasp(s.subset({0}), grasp(0, 0, M_PI / 2), GripperModel{}, 0.5).label, 1);
}

TEST(Oracle, JawOverWallIsApproachCollision) {
  const Scene s = scene_of({lay(0, 95, 0, M_PI / 2)});
  const auto out = execute_grasp(s, grasp(95, 0, 0), GripperModel{}, 0.5);
  EXPECT_EQ(out.label, 0);
  EXPECT_EQ(out.reason, FailureReason::approach_collision);
}

TEST(Oracle, JawLandingOnCableIsApproachCollision) {
  const Scene s = scene_of({lay(0, 0, 0, 0)});
  // Opening too narrow: the jaws come down on top of the cable.
  GripperModel tight;
  tight.open_clearance = 0.0;
  const auto out = execute_grasp(s, grasp(0, 0, M_PI / 2, 2.0), tight, 0.5);
  EXPECT_EQ(out.reason, FailureReason::approach_collision);
}

TEST(Oracle, SkewedClosingAxisNeedsFriction) {
  const Scene s = scene_of({lay(0, 0, 0, 0)});
  // Closing axis 30 degrees off the cable normal: the tube normal is 30 degrees from it.
  const GraspPose g = grasp(0, 0, M_PI / 2 + M_PI / 6, 12.0);
  const auto low = execute_grasp(s, g, GripperModel{}, std::tan(M_PI / 6) - 0.05);
  EXPECT_EQ(low.reason, FailureReason::no_force_closure);
  EXPECT_EQ(low.contacted_ids, std::vector<int>{0});
  EXPECT_EQ(execute_grasp(s, g, GripperModel{}, std::tan(M_PI / 6) + 0.05).label, 1);
}

TEST(Oracle, TubeNormalDropsTangentComponent) {
  const PlacedCable c = lay(0, 0, 0, M_PI / 4);
  const Vec3 tangent(std::cos(M_PI / 4), std::sin(M_PI / 4), 0);
  const Vec3 n = tube_normal(c, Vec3(0, 0, 4), Vec3::UnitX());
  EXPECT_NEAR(n.dot(tangent), 0.0, 1e-12);
  EXPECT_NEAR(n.norm(), 1.0, 1e-12);
  EXPECT_GT(n.x(), 0.0);
}

TEST(Oracle, ReasonNamesRoundTrip) {
  for (auto r : {FailureReason::none, FailureReason::approach_collision, FailureReason::multi_object,
                 FailureReason::no_force_closure, FailureReason::empty_close}) {
    EXPECT_EQ(failure_from_string(to_string(r)), r);
  }
  EXPECT_EQ(error_kind([] { failure_from_string("slipped"); }), "InvalidArgument");
  EXPECT_EQ(error_kind([] { execute_grasp(scene_of({}), grasp(0, 0, 0), GripperModel{}, 0.0); }), "InvalidArgument");
}

TEST(ClassWeights, Examples) {
  const auto even = class_weights(10, 10);
  EXPECT_DOUBLE_EQ(even[0], 1.0);
  EXPECT_DOUBLE_EQ(even[1], 1.0);
  const auto skew = class_weights(3, 1);
  EXPECT_DOUBLE_EQ(skew[0], 0.5);
  EXPECT_DOUBLE_EQ(skew[1], 1.5);
  EXPECT_EQ(error_kind([] { class_weights(5, 0); }), "SingleClass");
  EXPECT_EQ(error_kind([] { class_weights(std::vector<GraspSample>(3)); }), "SingleClass");
}

TEST(Oracle, Deterministic) {
  for (const auto& l : labeled_scenes(3, 100, 20)) {
    for (const auto& c : l.candidates) {
      const auto a = execute_grasp(l.gs.scene, c.pose, GripperModel{}, l.gs.friction);
      const auto b = execute_grasp(l.gs.scene, c.pose, GripperModel{}, l.gs.friction);
      EXPECT_EQ(a.label, b.label);
      EXPECT_EQ(a.reason, b.reason);
      EXPECT_EQ(a.contacted_ids, b.contacted_ids);
      EXPECT_EQ(a.closed_width, b.closed_width);
    }
  }
}

TEST(Oracle, MoreFrictionNeverLosesAGrasp) {
  int positives_low = 0, positives_high = 0;
  for (const auto& l : labeled_scenes(50, 200, 20)) {
    for (const auto& c : l.candidates) {
      const int low = execute_grasp(l.gs.scene, c.pose, GripperModel{}, 0.15).label;
      const int high = execute_grasp(l.gs.scene, c.pose, GripperModel{}, 0.6).label;
      EXPECT_LE(low, high);
      positives_low += low;
      positives_high += high;
    }
  }
  EXPECT_GT(positives_high, positives_low);
}

TEST(Oracle, SuccessesTouchExactlyOneCable) {
  int positives = 0;
  for (const auto& l : labeled_scenes(10, 300, 50)) {
    for (const auto& c : l.candidates) {
      const auto out = execute_grasp(l.gs.scene, c.pose, GripperModel{}, l.gs.friction);
      if (out.label != 1) continue;
      ++positives;
      EXPECT_EQ(out.contacted_ids.size(), 1u);
    }
  }
  EXPECT_GT(positives, 0);
}

TEST(Oracle, SuccessSurvivesRemovingOtherCablesAndWideningBin) {
  int checked = 0;
  BinSpec wide;
  wide.inner_x += 40;
  wide.inner_y += 40;
  for (const auto& l : labeled_scenes(10, 400, 50)) {
    for (const auto& c : l.candidates) {
      const auto out = execute_grasp(l.gs.scene, c.pose, GripperModel{}, l.gs.friction);
      if (out.label != 1) continue;
      ++checked;
      const Scene alone = l.gs.scene.subset(out.contacted_ids);
      EXPECT_EQ(execute_grasp(alone, c.pose, GripperModel{}, l.gs.friction).label, 1);
      Scene widened = l.gs.scene;
      widened.bin = wide;
      widened.bin_pieces = bin_pieces(wide);
      EXPECT_EQ(execute_grasp(widened, c.pose, GripperModel{}, l.gs.friction).label, 1);
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Oracle, LabelsReplayFromSavedScenes) {
  const auto dir = std::filesystem::temp_directory_path() / "graspforge_simlab_replay";
  std::filesystem::remove_all(dir);
  for (const auto& l : labeled_scenes(3, 500, 30)) {
    const auto manifest = dir / std::to_string(l.gs.seed) / "scene.json";
    write_scene(l.gs.scene, manifest);
    const Scene back = read_scene(manifest, small_scenes().decompose);
    for (const auto& c : l.candidates) {
      const auto a = execute_grasp(l.gs.scene, c.pose, GripperModel{}, l.gs.friction);
      const auto b = execute_grasp(back, c.pose, GripperModel{}, l.gs.friction);
      EXPECT_EQ(a.label, b.label);
      EXPECT_EQ(a.reason, b.reason);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(SceneGen, SamplerStaysInsideBin) {
  const SceneGenConfig cfg = small_scenes();
  for (const auto& l : labeled_scenes(5, 600, 100)) {
    for (const auto& c : l.candidates) {
      EXPECT_LE(std::abs(c.pose.x), 0.5 * cfg.bin.inner_x);
      EXPECT_LE(std::abs(c.pose.y), 0.5 * cfg.bin.inner_y);
    }
  }
}

TEST(SceneGen, ValidatesConfig) {
  SceneGenConfig cfg;
  cfg.max_cables = 0;
  EXPECT_EQ(error_kind([&] { cfg.validate(); }), "InvalidArgument");
  cfg = SceneGenConfig{};
  cfg.friction_min = 0.0;
  EXPECT_EQ(error_kind([&] { cfg.validate(); }), "InvalidArgument");
  DatasetConfig dc;
  dc.scene_count = 0;
  EXPECT_EQ(error_kind([&] { generate_dataset(dc); }), "InvalidArgument");
}

TEST(Dataset, DeterministicAndIndependentOfJobs) {
  DatasetConfig cfg;
  cfg.scenes = small_scenes();
  cfg.sampler.n = 10;
  cfg.scene_count = 6;
  cfg.seed = 5;
  const Dataset a = generate_dataset(cfg, 1);
  const Dataset b = generate_dataset(cfg, 3);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  EXPECT_GT(a.samples.size(), 0u);
  EXPECT_EQ(a.summary.to_json(), b.summary.to_json());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].label, b.samples[i].label);
    EXPECT_EQ(a.samples[i].patch.data, b.samples[i].patch.data);
  }
  EXPECT_EQ(a.summary.samples, a.summary.positives + a.summary.negatives);
}

TEST(Dataset, WriteReadRoundTrip) {
  DatasetConfig cfg;
  cfg.scenes = small_scenes();
  cfg.sampler.n = 8;
  cfg.sampler.patch_size = 32;
  cfg.scene_count = 4;
  const Dataset ds = generate_dataset(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "graspforge_dataset_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_dataset(ds, dir / "train.idx");
  EXPECT_TRUE(std::filesystem::exists(dir / "train.bin"));
  EXPECT_TRUE(std::filesystem::exists(dir / "train.summary.json"));
  const Dataset back = read_dataset(dir / "train.idx");
  ASSERT_EQ(back.samples.size(), ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto &x = ds.samples[i], &y = back.samples[i];
    EXPECT_EQ(x.label, y.label);
    EXPECT_EQ(x.patch.data, y.patch.data);
    EXPECT_EQ(x.patch.width, 32);
    EXPECT_EQ(x.meta.scene_seed, y.meta.scene_seed);
    EXPECT_EQ(x.meta.reason, y.meta.reason);
    EXPECT_EQ(x.meta.contacted_ids, y.meta.contacted_ids);
    EXPECT_EQ(x.meta.pose.theta, y.meta.pose.theta);
    EXPECT_EQ(x.meta.f, y.meta.f);
  }
  EXPECT_EQ(back.summary.positives, ds.summary.positives);
  EXPECT_EQ(error_kind([&] { read_dataset(dir / "missing.idx"); }), "DatasetNotFound");
  write_file_atomic(dir / "bad.idx", "{\"label\": 1}\n");
  write_file_atomic(dir / "bad.bin", "");
  EXPECT_EQ(error_kind([&] { read_dataset(dir / "bad.idx"); }), "InvalidDataset");
  std::filesystem::remove_all(dir);
}

TEST(Dataset, Defaults) {
  const DatasetConfig cfg;
  EXPECT_EQ(cfg.target_samples, 2000);
  EXPECT_EQ(cfg.sampler.n, 10);
  EXPECT_EQ(cfg.sampler.patch_size, 32);
  EXPECT_EQ(cfg.seed, 42u);
}

TEST(Dataset, SingleCableSceneKeepsAtMostNGrasps) {
  DatasetConfig cfg;
  cfg.scenes = small_scenes();
  cfg.scenes.min_cables = 1;
  cfg.scenes.max_cables = 1;
  cfg.sampler.n = 10;
  cfg.scene_count = 1;
  cfg.target_samples = 0;
  const Dataset ds = generate_dataset(cfg);
  EXPECT_GE(ds.samples.size(), 1u);
  EXPECT_LE(ds.samples.size(), 10u);
  for (const auto& s : ds.samples) EXPECT_EQ(s.meta.cable_count, 1);
  EXPECT_EQ(ds.summary.samples, static_cast<int>(ds.samples.size()));
}

TEST(Dataset, TargetTruncatesWithinBudget) {
  DatasetConfig cfg;
  cfg.scenes = small_scenes();
  cfg.sampler.n = 10;
  cfg.scene_count = 50;
  cfg.target_samples = 15;
  const Dataset a = generate_dataset(cfg, 1);
  const Dataset b = generate_dataset(cfg, 2);
  EXPECT_EQ(a.samples.size(), 15u);
  EXPECT_EQ(a.summary.to_json(), b.summary.to_json());
  EXPECT_EQ(a.summary.samples, 15);
}
