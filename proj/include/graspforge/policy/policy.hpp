#pragma once

#include "graspforge/model/net.hpp"
#include "graspforge/sampler/sampler.hpp"
#include "graspforge/simlab/dataset.hpp"
#include "graspforge/simlab/oracle.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace graspforge {

enum class PolicyKind { random, cgcnn };

const char* to_string(PolicyKind k);
/// Throws InvalidArgument.
PolicyKind policy_from_string(const std::string& s);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::cgcnn;
  double lambda = 0.2;  // weight of the height bonus

  /// Throws InvalidArgument unless lambda is finite and >= 0.
  void validate() const;
};

struct ScoredCandidate {
  std::size_t index = 0;
  double q = 0.0;
  int r_height = 0;  // 0 = highest grasp point
  double score = 0.0;
};

/// Height ranks: candidates ordered by z descending, ties by lower x, then
/// lower y; rank 0 is the highest.
std::vector<int> height_ranks(const std::vector<GraspPose>& poses);

/// score_i = q_i + lambda * (1 - r_i / N). Throws Empty / ShapeMismatch.
std::vector<ScoredCandidate> score_candidates(const std::vector<GraspPose>& poses, const std::vector<double>& q,
                                              double lambda);

/// Index of the best score; ties go to lower z, then lower x, then lower y.
/// Throws Empty.
std::size_t select_by_quality(const std::vector<GraspPose>& poses, const std::vector<double>& q, double lambda);

/// Uniform index. Throws Empty.
std::size_t select_random(std::size_t count, Rng& rng);

/// Scores every candidate patch with the net, then select_by_quality.
std::size_t select_cgcnn(const std::vector<GraspCandidate>& candidates, const QualityNet& net, double lambda,
                         int jobs = 1);

struct Policy {
  PolicyConfig config;
  const QualityNet* net = nullptr;  // required for cgcnn
};

struct EvalConfig {
  SceneGenConfig scenes;  // cable count range taken from min_cables / max_cables
  SamplerConfig sampler;
  GripperModel gripper;
  int trials = 200;
  std::uint64_t seed = 0;
  int scene_attempts = 20;  // fresh scene seeds tried when a scene overfills

  /// Throws InvalidArgument.
  void validate() const;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t scene_seed = 0;
  int cable_count = 0;
  int candidates = 0;
  int chosen = -1;
  int label = 0;
  std::string reason;  // FailureReason name, or no_candidates
};

/// Selects among the candidates with the policy and executes the choice.
/// No candidates gives reason no_candidates.
TrialResult run_trial(const GeneratedScene& gs, const std::vector<GraspCandidate>& candidates, const Policy& policy,
                      const GripperModel& gripper, Rng& rng);

struct RateSummary {
  int trials = 0;
  int successes = 0;
  double rate = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
};

struct EvalStats {
  std::string policy;
  RateSummary overall;
  std::map<std::string, int> failures_by_reason;
  std::map<int, RateSummary> by_cable_count;
  std::vector<TrialResult> trials;

  std::string to_json() const;
  /// Rows cable_count,trials,successes,rate,wilson_low,wilson_high plus an "all" row.
  std::string to_csv() const;
};

inline constexpr double kWilsonZ = 1.959964;

/// Wilson score interval at 95%. Throws InvalidArgument for trials < 1.
RateSummary wilson(int successes, int trials, double z = kWilsonZ);

/// Per trial: generate and settle a scene with a derived seed, observe,
/// sample, select and execute. Trials run in parallel and are reported in
/// trial order; the scene sequence depends only on the seed, so different
/// policies see the same scenes.
EvalStats evaluate_policy(const Policy& policy, const EvalConfig& cfg, int jobs = 1);

}  // namespace graspforge
