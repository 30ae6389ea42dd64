#include "msg/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "msg/errors.hpp"

namespace msg {

Pose Pose::make(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) {
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    throw ValidationError("pose quaternion is not unit norm (|q| = " + std::to_string(q.norm()) + ")");
  }
  if (!t.allFinite()) throw ValidationError("pose translation is not finite");
  return Pose{q, t};
}

void Intrinsics::check() const {
  if (!(fx > 0) || !(fy > 0)) throw ValidationError("intrinsics: fx and fy must be positive");
  if (!(cx > 0 && cx < width)) throw ValidationError("intrinsics: cx must lie in (0, width)");
  if (!(cy > 0 && cy < height)) throw ValidationError("intrinsics: cy must lie in (0, height)");
}

void Box3::check() const {
  if (!(half_extents.array() > 0).all()) throw ValidationError("box3: half extents must be positive");
  if (std::abs(orientation.norm() - 1.0) > 1e-6) throw ValidationError("box3: orientation is not unit norm");
}

PoseDistance relative_pose_distance(const Pose& a, const Pose& b) {
  PoseDistance d;
  d.translation = (a.translation - b.translation).norm();
  // Geodesic angle of R_a^T R_b. The half-angle form 2*atan2(|v|, |w|) equals
  // arccos((trace - 1) / 2) but keeps precision near 0 and pi; |w| folds the
  // quaternion double cover.
  const Eigen::Quaterniond rel = a.rotation.conjugate() * b.rotation;
  d.rotation = 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
  return d;
}

std::optional<Box2> project_box3(const Box3& box, const Pose& cam, const Intrinsics& intr,
                                 const ProjectionParams& params) {
  const Eigen::Matrix3d box_rot = box.orientation.toRotationMatrix();
  const Eigen::Matrix3d cam_from_world = cam.rotation.toRotationMatrix().transpose();

  double umin = INFINITY, vmin = INFINITY, umax = -INFINITY, vmax = -INFINITY;
  int visible = 0;
  for (int corner = 0; corner < 8; ++corner) {
    const Eigen::Vector3d sign((corner & 1) ? 1.0 : -1.0, (corner & 2) ? 1.0 : -1.0, (corner & 4) ? 1.0 : -1.0);
    const Eigen::Vector3d world = box.center + box_rot * sign.cwiseProduct(box.half_extents);
    const Eigen::Vector3d p = cam_from_world * (world - cam.translation);
    if (p.z() <= params.near) continue;
    ++visible;
    const double u = intr.fx * p.x() / p.z() + intr.cx;
    const double v = intr.fy * p.y() / p.z() + intr.cy;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (visible < params.min_visible_corners || visible == 0) return std::nullopt;

  Box2 out{std::clamp(umin, 0.0, intr.width), std::clamp(vmin, 0.0, intr.height),
           std::clamp(umax, 0.0, intr.width), std::clamp(vmax, 0.0, intr.height)};
  if (!out.valid() || out.area() < params.min_area) return std::nullopt;
  return out;
}

namespace {

double intersection_area(const Box2& a, const Box2& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

}  // namespace

double box_iou(const Box2& a, const Box2& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double giou(const Box2& a, const Box2& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double hull = (std::max(a.x2, b.x2) - std::min(a.x1, b.x1)) * (std::max(a.y2, b.y2) - std::min(a.y1, b.y1));
  return inter / uni - (hull - uni) / hull;
}

}  // namespace msg
