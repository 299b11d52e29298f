#include "graspforge/error.hpp"
#include "graspforge/policy/policy.hpp"
#include "json.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

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

std::vector<GraspPose> poses_at(const std::vector<double>& z) {
  std::vector<GraspPose> out;
  for (std::size_t i = 0; i < z.size(); ++i) out.push_back({static_cast<double>(i), 0.0, z[i], 0.0, 8.0});
  return out;
}

// Reference argmax of q with the global tie-break.
std::size_t reference_argmax(const std::vector<GraspPose>& poses, const std::vector<double>& q) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best] || (q[i] == q[best] && tie_break_less(poses[i], poses[best]))) best = i;
  }
  return best;
}

std::vector<GraspPose> random_poses(Rng& rng, int n) {
  std::vector<GraspPose> out;
  for (int i = 0; i < n; ++i) {
    // Coarse z values so height ties occur.
    out.push_back({uniform(rng, -50, 50), uniform(rng, -50, 50), static_cast<double>(uniform_int(rng, 0, 4)),
                   uniform(rng, 0, M_PI), 8.0});
  }
  return out;
}

std::vector<double> random_q(Rng& rng, int n) {
  std::vector<double> q(n);
  for (auto& v : q) v = uniform(rng, 0, 1);
  return q;
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

// Patch of a tube crossing the center along the patch's vertical axis.
Patch ridge_patch(int size) {
  Patch p(size, size, 1.0f, 500.0f);
  for (int v = 0; v < size; ++v) {
    for (int u = 0; u < size; ++u) {
      const double d = std::abs(u - (size - 1) / 2.0);
      if (d < 4.0) p.at(u, v) = static_cast<float>(500.0 - std::sqrt(16.0 - d * d) - 4.0);
    }
  }
  return p;
}

// Mean relative height times -1 as logit: raised centers score high, flat patches 0.5.
QualityNet ridge_detector(int size) {
  QualityNet net = QualityNet::from_layers(size, {{LayerKind::global_avg_pool}, {LayerKind::dense, 1, 1}});
  net.params[0].data = {-20.0f};
  return net;
}

}  // namespace

TEST(PolicyConfig, Validates) {
  PolicyConfig c;
  EXPECT_DOUBLE_EQ(c.lambda, 0.2);
  c.lambda = -0.1;
  EXPECT_EQ(error_kind([&] { c.validate(); }), "InvalidArgument");
  c.lambda = std::nan("");
  EXPECT_EQ(error_kind([&] { c.validate(); }), "InvalidArgument");
  EXPECT_EQ(policy_from_string("random"), PolicyKind::random);
  EXPECT_EQ(policy_from_string("cgcnn"), PolicyKind::cgcnn);
  EXPECT_EQ(error_kind([] { policy_from_string("greedy"); }), "InvalidArgument");
}

TEST(HeightRanks, HighestIsZero) {
  EXPECT_EQ(height_ranks(poses_at({10, 40, 20})), (std::vector<int>{2, 0, 1}));
}

TEST(HeightRanks, AreAPermutation) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto ranks = height_ranks(random_poses(rng, 1 + trial % 17));
    std::sort(ranks.begin(), ranks.end());
    for (std::size_t i = 0; i < ranks.size(); ++i) EXPECT_EQ(ranks[i], static_cast<int>(i));
  }
}

TEST(ScoreCandidates, CombinesQualityAndHeight) {
  const auto s = score_candidates(poses_at({40, 10}), {0.8, 0.8}, 0.5);
  EXPECT_EQ(s[0].r_height, 0);
  EXPECT_EQ(s[1].r_height, 1);
  EXPECT_DOUBLE_EQ(s[0].score, 0.8 + 0.5 * 1.0);
  EXPECT_DOUBLE_EQ(s[1].score, 0.8 + 0.5 * 0.5);
  EXPECT_EQ(error_kind([] { score_candidates({}, {}, 0.2); }), "Empty");
  EXPECT_EQ(error_kind([] { score_candidates(poses_at({1, 2}), {0.5}, 0.2); }), "ShapeMismatch");
}

TEST(SelectCgcnn, Examples) {
  EXPECT_EQ(select_by_quality(poses_at({1, 2, 3}), {0.9, 0.7, 0.2}, 0.0), 0u);
  EXPECT_EQ(select_by_quality(poses_at({40, 10}), {0.8, 0.8}, 0.5), 0u);
  for (double lambda : {0.0, 0.2, 5.0}) EXPECT_EQ(select_by_quality(poses_at({7}), {0.3}, lambda), 0u);
  EXPECT_EQ(error_kind([] { select_by_quality({}, {}, 0.2); }), "Empty");
}

TEST(SelectCgcnn, TiesGoToLowerZThenXThenY) {
  std::vector<GraspPose> p = {{5, 0, 3, 0, 8}, {1, 0, 3, 0, 8}, {1, -2, 3, 0, 8}, {9, 9, 2, 0, 8}};
  // lambda 0: all equal scores, lowest z wins.
  EXPECT_EQ(select_by_quality(p, {0.5, 0.5, 0.5, 0.5}, 0.0), 3u);
  // Same z: lower x, then lower y.
  EXPECT_EQ(select_by_quality(p, {0.5, 0.5, 0.5, 0.1}, 0.0), 2u);
  EXPECT_EQ(select_by_quality({p[0], p[1]}, {0.5, 0.5}, 0.0), 1u);
}

TEST(SelectCgcnn, ZeroLambdaIsArgmax) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 30;
    const auto poses = random_poses(rng, n);
    const auto q = random_q(rng, n);
    EXPECT_EQ(select_by_quality(poses, q, 0.0), reference_argmax(poses, q));
  }
}

TEST(SelectCgcnn, ShiftingQualitiesKeepsChoice) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 30;
    const auto poses = random_poses(rng, n);
    const auto q = random_q(rng, n);
    const double lambda = uniform(rng, 0, 1);
    for (double c : {-0.5, 0.25, 3.0}) {
      auto shifted = q;
      for (auto& v : shifted) v += c;
      EXPECT_EQ(select_by_quality(poses, shifted, lambda), select_by_quality(poses, q, lambda));
    }
  }
}

TEST(SelectCgcnn, InputOrderDoesNotMatter) {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 30;
    const auto poses = random_poses(rng, n);
    auto q = random_q(rng, n);
    // Some exact quality ties.
    for (int k = 0; k < n / 3; ++k) q[uniform_int(rng, 0, n - 1)] = q[0];
    const double lambda = trial % 2 ? 0.0 : 0.3;
    const auto chosen = poses[select_by_quality(poses, q, lambda)];

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<GraspPose> p2;
    std::vector<double> q2;
    for (auto i : perm) {
      p2.push_back(poses[i]);
      q2.push_back(q[i]);
    }
    const auto again = p2[select_by_quality(p2, q2, lambda)];
    EXPECT_EQ(again.x, chosen.x);
    EXPECT_EQ(again.y, chosen.y);
    EXPECT_EQ(again.z, chosen.z);
  }
}

TEST(SelectCgcnn, UsesNetworkQualities) {
  std::vector<GraspCandidate> c(3);
  c[0].pose = {0, 0, 10, 0, 8};
  c[1].pose = {5, 0, 20, 0, 8};
  c[2].pose = {9, 0, 30, 0, 8};
  for (auto& k : c) k.patch = Patch(8, 8, 1.0f, 500.0f);
  c[1].patch = ridge_patch(8);
  EXPECT_EQ(select_cgcnn(c, ridge_detector(8), 0.2), 1u);
  EXPECT_EQ(error_kind([] { select_cgcnn({}, ridge_detector(8), 0.2); }), "Empty");
}

TEST(SelectRandom, Examples) {
  Rng rng(5);
  EXPECT_EQ(select_random(1, rng), 0u);
  EXPECT_EQ(error_kind([&] { select_random(0, rng); }), "Empty");
  Rng a(9), b(9);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(select_random(10, a), select_random(10, b));
}

TEST(SelectRandom, IsUniform) {
  Rng rng(21);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 10000; ++i) counts[select_random(10, rng)]++;
  for (int c : counts) {
    EXPECT_GE(c / 1e4, 0.08);
    EXPECT_LE(c / 1e4, 0.12);
  }
}

TEST(Wilson, MatchesClosedForm) {
  // 8 of 10 at z = 1.96: closed-form interval [0.4902, 0.9433].
  const auto s = wilson(8, 10);
  EXPECT_DOUBLE_EQ(s.rate, 0.8);
  EXPECT_NEAR(s.wilson_low, 0.4902, 1e-4);
  EXPECT_NEAR(s.wilson_high, 0.9433, 1e-4);
  const auto all = wilson(20, 20);
  EXPECT_DOUBLE_EQ(all.wilson_high, 1.0);
  EXPECT_LT(all.wilson_low, 1.0);
  EXPECT_DOUBLE_EQ(wilson(0, 20).wilson_low, 0.0);
  EXPECT_EQ(error_kind([] { wilson(0, 0); }), "InvalidArgument");
}

TEST(Wilson, ContainsRateAndShrinks) {
  for (int n : {5, 50, 500}) {
    for (int s = 0; s <= n; s += std::max(1, n / 10)) {
      const auto w = wilson(s, n);
      EXPECT_LE(w.wilson_low, w.rate);
      EXPECT_GE(w.wilson_high, w.rate);
    }
  }
  EXPECT_LT(wilson(250, 500).wilson_high - wilson(250, 500).wilson_low,
            wilson(25, 50).wilson_high - wilson(25, 50).wilson_low);
}

TEST(RunTrial, RiggedSceneAlwaysSucceeds) {
  const QualityNet net = ridge_detector(16);
  const Policy policy{{PolicyKind::cgcnn, 0.2}, &net};
  Rng rng(1);
  int successes = 0, trials = 0;
  for (double yaw : {0.0, 0.4, 1.1, 2.0}) {
    for (double x : {-20.0, 0.0, 25.0}) {
      GeneratedScene gs;
      gs.scene.bin_pieces = bin_pieces(gs.scene.bin);
      Pose3 pose;
      pose.translation = Vec3(x, 0, 4.01);
      pose.rotation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
      gs.scene.cables.push_back(PlacedCable::make(0, straight_cable(), pose));
      gs.friction = 0.3;

      // Decoys over the empty floor sit higher in z so the height bonus favors them.
      std::vector<GraspCandidate> c;
      for (int k = 0; k < 4; ++k) {
        GraspCandidate d;
        d.pose = {x + 40.0 * std::cos(yaw + M_PI / 2 + k), 40.0 * std::sin(yaw + M_PI / 2 + k), 6.0, yaw, 8.0};
        d.patch = Patch(16, 16, 1.0f, 500.0f);
        c.push_back(d);
      }
      GraspCandidate good;
      good.pose = {x, 0, 1.0, yaw + M_PI / 2, 8.0};
      good.patch = ridge_patch(16);
      c.insert(c.begin() + 2, good);

      const auto r = run_trial(gs, c, policy, GripperModel{}, rng);
      EXPECT_EQ(r.chosen, 2);
      successes += r.label;
      ++trials;
    }
  }
  EXPECT_EQ(successes, trials);
}

TEST(RunTrial, NoCandidatesIsAFailure) {
  GeneratedScene gs;
  Rng rng(1);
  const auto r = run_trial(gs, {}, Policy{{PolicyKind::random, 0.2}, nullptr}, GripperModel{}, rng);
  EXPECT_EQ(r.label, 0);
  EXPECT_EQ(r.reason, "no_candidates");
  EXPECT_EQ(r.chosen, -1);
}

namespace {

EvalConfig small_eval() {
  EvalConfig cfg;
  cfg.scenes.library_size = 6;
  cfg.scenes.min_cables = 2;
  cfg.scenes.max_cables = 5;
  cfg.sampler.n = 20;
  cfg.trials = 8;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST(EvaluatePolicy, DeterministicAndIndependentOfJobs) {
  const auto cfg = small_eval();
  const Policy random{{PolicyKind::random, 0.2}, nullptr};
  const auto a = evaluate_policy(random, cfg, 1);
  const auto b = evaluate_policy(random, cfg, 3);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.to_csv(), b.to_csv());

  EXPECT_EQ(a.overall.trials, cfg.trials);
  int failures = 0, grouped = 0;
  for (const auto& [reason, n] : a.failures_by_reason) failures += n;
  for (const auto& [count, s] : a.by_cable_count) {
    EXPECT_GE(count, cfg.scenes.min_cables);
    EXPECT_LE(count, cfg.scenes.max_cables);
    grouped += s.trials;
  }
  EXPECT_EQ(failures, a.overall.trials - a.overall.successes);
  EXPECT_EQ(grouped, cfg.trials);
  for (const auto& t : a.trials) EXPECT_EQ(t.label == 1, t.reason == "none");
}

TEST(EvaluatePolicy, PoliciesSeeTheSameScenes) {
  const auto cfg = small_eval();
  Rng rng(4);
  const QualityNet net = make_quality_net(cfg.sampler.patch_size, rng);
  const auto a = evaluate_policy({{PolicyKind::random, 0.2}, nullptr}, cfg);
  const auto b = evaluate_policy({{PolicyKind::cgcnn, 0.2}, &net}, cfg);
  EXPECT_EQ(b.policy, "cgcnn");
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    EXPECT_EQ(a.trials[t].scene_seed, b.trials[t].scene_seed);
    EXPECT_EQ(a.trials[t].candidates, b.trials[t].candidates);
  }
}

TEST(EvaluatePolicy, StatsOutputs) {
  const auto stats = evaluate_policy({{PolicyKind::random, 0.2}, nullptr}, small_eval());
  const auto j = nlohmann::json::parse(stats.to_json());
  for (const char* key : {"policy", "trials", "successes", "rate", "wilson_low", "wilson_high", "failures_by_reason",
                          "by_cable_count"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["policy"], "random");
  const auto csv = stats.to_csv();
  EXPECT_EQ(csv.rfind("cable_count,trials,successes,rate,wilson_low,wilson_high\n", 0), 0u);
  EXPECT_NE(csv.find("\nall,8,"), std::string::npos);
}

TEST(EvaluatePolicy, ValidatesInputs) {
  auto cfg = small_eval();
  cfg.trials = 0;
  EXPECT_EQ(error_kind([&] { evaluate_policy({{PolicyKind::random, 0.2}, nullptr}, cfg); }), "InvalidArgument");
  EXPECT_EQ(error_kind([&] { evaluate_policy({{PolicyKind::cgcnn, 0.2}, nullptr}, small_eval()); }),
            "InvalidArgument");
}
