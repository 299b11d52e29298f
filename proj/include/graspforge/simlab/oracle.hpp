#pragma once

#include "graspforge/geometry/hull.hpp"
#include "graspforge/sampler/sampler.hpp"
#include "graspforge/scene/scene.hpp"

#include <string>
#include <vector>

namespace graspforge {

/// Parallel two-jaw gripper approaching along -z. Each jaw is a box spanning
/// jaw_thickness along the closing axis, jaw_width across it, and
/// finger_length upward from the grasp height z.
struct GripperModel {
  double jaw_thickness = 4.0;
  double jaw_width = 10.0;
  double finger_length = 40.0;
  double w_max = 30.0;
  double open_clearance = 10.0;   // w_open = w + open_clearance
  double lift_height = 30.0;
  double entangle_overlap = 5.0;  // other cables dragged further than this fail the lift
  double contact_tol = 0.05;      // mm
  double close_gap = 1e-3;        // jaw stop distance, mm

  /// Throws InvalidArgument.
  void validate() const;
};

enum class FailureReason { none, approach_collision, multi_object, no_force_closure, empty_close };

const char* to_string(FailureReason r);
FailureReason failure_from_string(const std::string& s);

struct GraspOutcome {
  int label = 0;
  FailureReason reason = FailureReason::empty_close;
  std::vector<int> contacted_ids;  // sorted cable ids touched by the jaws or dragged on lift
  double closed_width = 0.0;       // jaw separation after closing, mm
};

/// Jaw box for one side (-1 or +1) at opening `opening`; `top` is the upper
/// end of the box, so a swept approach uses a large top.
ConvexPiece jaw_box(const GraspPose& g, const GripperModel& gripper, int side, double opening, double top);

/// Staged geometric grasp execution against the decomposed scene:
///  1. approach: the open jaws swept down from above the bin to height z
///     must not touch the bin or any cable (approach_collision);
///  2. close: each jaw advances along the closing axis until it touches
///     something; no cable touched gives empty_close, two or more cables give
///     multi_object, a cable held from one side only gives no_force_closure;
///  3. hold: both contacts must satisfy the friction-cone test with tube
///     normals (perpendicular to the local cable axis) and the closing axis
///     (no_force_closure);
///  4. lift: the held cable is raised by lift_height; any other cable that
///     would be dragged by more than entangle_overlap makes it multi_object.
GraspOutcome execute_grasp(const Scene& scene, const GraspPose& g, const GripperModel& gripper, double f);

/// Outward tube normal at a contact: the direction `toward_jaw` with its
/// component along the cable tangent at `point` removed.
Vec3 tube_normal(const PlacedCable& cable, const Vec3& point, const Vec3& toward_jaw);

}  // namespace graspforge
