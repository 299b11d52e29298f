#pragma once

#include "graspforge/model/train.hpp"
#include "graspforge/policy/policy.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace graspforge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand (decompose, make-scenes, sample, label, train,
/// evaluate, report). Settings come from GRASPFORGE_CONFIG, then --config,
/// then flags. Success prints a one-line JSON summary to `out`; domain errors
/// print a one-line JSON error to `out` and a message to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Success rate by cable count, one bar per stats file with Wilson whiskers.
std::string success_chart_svg(const std::vector<EvalStats>& stats);

/// Training loss and validation accuracy per epoch.
std::string loss_curve_svg(const std::vector<EpochMetrics>& log);

/// Parses the JSON written by EvalStats::to_json (trial list excluded).
/// Throws InvalidStats.
EvalStats parse_stats(const std::string& json);

}  // namespace graspforge
