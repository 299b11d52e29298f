#include "graspforge/geometry/pose.hpp"

#include "graspforge/error.hpp"

#include <cmath>

namespace graspforge {

Pose3 Pose3::inverse() const {
  Pose3 inv;
  inv.rotation = rotation.conjugate();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Pose3 Pose3::operator*(const Pose3& other) const {
  Pose3 out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

void Pose3::validate() const {
  if (std::abs(rotation.norm() - 1.0) > 1e-9) {
    throw Error("InvalidPose", "rotation quaternion is not unit length");
  }
  if (!translation.allFinite()) throw Error("InvalidPose", "translation is not finite");
}

Pose3 Pose3::from_translation_yaw(const Vec3& t, double yaw) {
  Pose3 p;
  p.translation = t;
  p.rotation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  return p;
}

}  // namespace graspforge
