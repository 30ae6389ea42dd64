#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace msg {

/// Camera pose, world-from-camera. The camera looks down +z with +x right and
/// +y down (pinhole convention). Quaternions are stored (w, x, y, z).
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // camera center, world frame, meters

  /// Throws ValidationError unless |q| is within 1e-6 of 1.
  static Pose make(const Eigen::Quaterniond& q, const Eigen::Vector3d& t);
};

struct Intrinsics {
  double fx = 200.0;
  double fy = 200.0;
  double cx = 128.0;
  double cy = 96.0;
  double width = 256.0;
  double height = 192.0;

  void check() const;  // throws ValidationError
};

/// Axis-aligned image box in corner form, pixels.
struct Box2 {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double area() const { return (x2 - x1) * (y2 - y1); }
  bool valid() const { return x1 < x2 && y1 < y2; }
  bool operator==(const Box2&) const = default;
};

/// Oriented 3D box; `orientation` maps box axes to world.
struct Box3 {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Constant(0.5);
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  void check() const;  // throws ValidationError
};

struct PoseDistance {
  double translation = 0;  // meters
  double rotation = 0;     // radians, geodesic angle on SO(3), in [0, pi]
};

PoseDistance relative_pose_distance(const Pose& a, const Pose& b);

struct ProjectionParams {
  double min_area = 100.0;      // px^2
  double near = 0.05;           // meters
  int min_visible_corners = 1;
};

/// Projects the 8 corners of `box` into the image and returns the clipped
/// axis-aligned hull of the corners in front of the near plane. Returns
/// nullopt when too few corners are visible or the clipped area is below
/// `params.min_area`.
std::optional<Box2> project_box3(const Box3& box, const Pose& cam, const Intrinsics& intr,
                                 const ProjectionParams& params = {});

double box_iou(const Box2& a, const Box2& b);

/// Generalized IoU: IoU minus the fraction of the smallest enclosing box not
/// covered by the union. Range (-1, 1].
double giou(const Box2& a, const Box2& b);

}  // namespace msg
