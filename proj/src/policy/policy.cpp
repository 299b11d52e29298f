#include "graspforge/policy/policy.hpp"

#include "graspforge/error.hpp"
#include "graspforge/parallel.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace graspforge {

namespace {

enum : std::uint64_t { kTrialStream = 0x7A1, kSelectStream = 0x5E1 };

}  // namespace

const char* to_string(PolicyKind k) { return k == PolicyKind::random ? "random" : "cgcnn"; }

PolicyKind policy_from_string(const std::string& s) {
  if (s == "random") return PolicyKind::random;
  if (s == "cgcnn") return PolicyKind::cgcnn;
  throw Error("InvalidArgument", "unknown policy " + s + " (expected random or cgcnn)");
}

void PolicyConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw Error("InvalidArgument", "lambda must be finite and >= 0");
}

std::vector<int> height_ranks(const std::vector<GraspPose>& poses) {
  std::vector<std::size_t> order(poses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const GraspPose &p = poses[a], &q = poses[b];
    if (p.z != q.z) return p.z > q.z;
    if (p.x != q.x) return p.x < q.x;
    return p.y < q.y;
  });
  std::vector<int> rank(poses.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
  return rank;
}

std::vector<ScoredCandidate> score_candidates(const std::vector<GraspPose>& poses, const std::vector<double>& q,
                                              double lambda) {
  if (poses.empty()) throw Error("Empty", "no candidates to score");
  if (q.size() != poses.size()) throw Error("ShapeMismatch", "one quality per candidate required");
  const auto ranks = height_ranks(poses);
  const double n = static_cast<double>(poses.size());
  std::vector<ScoredCandidate> out(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out[i] = {i, q[i], ranks[i], q[i] + lambda * (1.0 - ranks[i] / n)};
  }
  return out;
}

std::size_t select_by_quality(const std::vector<GraspPose>& poses, const std::vector<double>& q, double lambda) {
  const auto scored = score_candidates(poses, q, lambda);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    if (scored[i].score > scored[best].score ||
        (scored[i].score == scored[best].score && tie_break_less(poses[i], poses[best]))) {
      best = i;
    }
  }
  return best;
}

std::size_t select_random(std::size_t count, Rng& rng) {
  if (count == 0) throw Error("Empty", "no candidates to choose from");
  return static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(count) - 1));
}

std::size_t select_cgcnn(const std::vector<GraspCandidate>& candidates, const QualityNet& net, double lambda,
                         int jobs) {
  if (candidates.empty()) throw Error("Empty", "no candidates to choose from");
  std::vector<double> q(candidates.size());
  std::vector<GraspPose> poses(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t i) { q[i] = forward(net, candidates[i].patch); });
  for (std::size_t i = 0; i < candidates.size(); ++i) poses[i] = candidates[i].pose;
  return select_by_quality(poses, q, lambda);
}

void EvalConfig::validate() const {
  if (trials < 1) throw Error("InvalidArgument", "trials must be >= 1");
  if (scene_attempts < 1) throw Error("InvalidArgument", "scene_attempts must be >= 1");
  scenes.validate();
  sampler.validate();
  gripper.validate();
}

TrialResult run_trial(const GeneratedScene& gs, const std::vector<GraspCandidate>& candidates, const Policy& policy,
                      const GripperModel& gripper, Rng& rng) {
  TrialResult r;
  r.scene_seed = gs.seed;
  r.cable_count = static_cast<int>(gs.scene.cables.size());
  r.candidates = static_cast<int>(candidates.size());
  if (candidates.empty()) {
    r.reason = "no_candidates";
    return r;
  }
  std::size_t pick = 0;
  if (policy.config.kind == PolicyKind::random) {
    pick = select_random(candidates.size(), rng);
  } else {
    if (!policy.net) throw Error("InvalidArgument", "cgcnn policy needs a network");
    pick = select_cgcnn(candidates, *policy.net, policy.config.lambda);
  }
  r.chosen = static_cast<int>(pick);
  const GraspOutcome outcome = execute_grasp(gs.scene, candidates[pick].pose, gripper, gs.friction);
  r.label = outcome.label;
  r.reason = to_string(outcome.reason);
  return r;
}

RateSummary wilson(int successes, int trials, double z) {
  if (trials < 1) throw Error("InvalidArgument", "trials must be >= 1");
  RateSummary s;
  s.trials = trials;
  s.successes = successes;
  const double n = trials, p = static_cast<double>(successes) / n;
  s.rate = p;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  // The interval always contains p; the clamps absorb rounding at p = 0 and p = 1.
  s.wilson_low = std::clamp(center - half, 0.0, p);
  s.wilson_high = std::clamp(center + half, p, 1.0);
  return s;
}

EvalStats evaluate_policy(const Policy& policy, const EvalConfig& cfg, int jobs) {
  policy.config.validate();
  cfg.validate();
  if (policy.config.kind == PolicyKind::cgcnn && !policy.net) throw Error("InvalidArgument", "cgcnn policy needs a network");
  const auto library = build_library(cfg.scenes, jobs);

  std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
  parallel_for(results.size(), jobs, [&](std::size_t t) {
    GeneratedScene gs;
    bool settled = false;
    for (int attempt = 0; attempt < cfg.scene_attempts && !settled; ++attempt) {
      try {
        gs = generate_scene(cfg.scenes, library, derive_seed(cfg.seed, kTrialStream + t, static_cast<std::uint64_t>(attempt)));
        settled = true;
      } catch (const Error& e) {
        if (e.kind() != "Overfilled") throw;
      }
    }
    if (!settled) throw Error("Overfilled", fmt::format("trial {}: no scene settled in {} attempts", t, cfg.scene_attempts));
    std::vector<GraspCandidate> candidates;
    try {
      candidates = sample_scene(cfg.scenes, gs, cfg.sampler);
    } catch (const Error& e) {
      if (e.kind() != "NoCandidates") throw;
    }
    Rng rng(derive_seed(gs.seed, kSelectStream));
    results[t] = run_trial(gs, candidates, policy, cfg.gripper, rng);
    results[t].trial = static_cast<int>(t);
  });

  EvalStats stats;
  stats.policy = to_string(policy.config.kind);
  std::map<int, std::pair<int, int>> groups;
  int successes = 0;
  for (const auto& r : results) {
    successes += r.label;
    if (r.label == 0) stats.failures_by_reason[r.reason]++;
    auto& g = groups[r.cable_count];
    g.first += r.label;
    g.second += 1;
  }
  stats.overall = wilson(successes, cfg.trials);
  for (const auto& [count, g] : groups) stats.by_cable_count[count] = wilson(g.first, g.second);
  stats.trials = std::move(results);
  return stats;
}

namespace {

nlohmann::json rate_json(const RateSummary& s) {
  return {{"trials", s.trials},
          {"successes", s.successes},
          {"rate", s.rate},
          {"wilson_low", s.wilson_low},
          {"wilson_high", s.wilson_high}};
}

}  // namespace

std::string EvalStats::to_json() const {
  nlohmann::json by_count = nlohmann::json::object();
  for (const auto& [count, s] : by_cable_count) by_count[std::to_string(count)] = rate_json(s);
  nlohmann::json j = {{"policy", policy},
                      {"trials", overall.trials},
                      {"successes", overall.successes},
                      {"rate", overall.rate},
                      {"wilson_low", overall.wilson_low},
                      {"wilson_high", overall.wilson_high},
                      {"failures_by_reason", failures_by_reason},
                      {"by_cable_count", by_count}};
  return j.dump(2);
}

std::string EvalStats::to_csv() const {
  std::string out = "cable_count,trials,successes,rate,wilson_low,wilson_high\n";
  auto row = [&](const std::string& key, const RateSummary& s) {
    out += fmt::format("{},{},{},{},{},{}\n", key, s.trials, s.successes, s.rate, s.wilson_low, s.wilson_high);
  };
  for (const auto& [count, s] : by_cable_count) row(std::to_string(count), s);
  row("all", overall);
  return out;
}

}  // namespace graspforge
