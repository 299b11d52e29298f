#pragma once

#include "graspforge/geometry/types.hpp"

namespace graspforge {

/// Rigid transform: p_world = rotation * p_local + translation (mm).
struct Pose3 {
  Vec3 translation = Vec3::Zero();
  Quat rotation = Quat::Identity();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  Vec3 inverse_apply(const Vec3& p) const { return rotation.conjugate() * (p - translation); }
  Vec3 inverse_rotate(const Vec3& v) const { return rotation.conjugate() * v; }

  Pose3 inverse() const;
  /// Composition: (a * b).apply(p) == a.apply(b.apply(p)).
  Pose3 operator*(const Pose3& other) const;

  /// Throws InvalidPose when the quaternion norm deviates from 1 by more than 1e-9.
  void validate() const;

  static Pose3 from_translation_yaw(const Vec3& t, double yaw);
};

}  // namespace graspforge
