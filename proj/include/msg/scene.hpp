#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msg/geometry.hpp"
#include "msg/graph.hpp"

namespace msg {

/// A 2D detection of an object in one frame. Ground-truth detections carry
/// the object's identity; detector output does not.
struct Detection {
  std::optional<ObjectId> object_id;
  Box2 box;
  std::optional<double> score;

  bool operator==(const Detection&) const = default;
};

struct Frame {
  PlaceId frame_id = 0;
  Pose pose;
  Intrinsics intrinsics;
  std::vector<Detection> detections;
};

struct Object3d {
  ObjectId object_id = 0;
  Box3 box;
  std::string label;
};

struct SceneAnnotation {
  std::string scene_id;
  std::vector<Frame> frames;
  std::optional<std::vector<Object3d>> objects3d;

  /// Throws ValidationError on non-consecutive frame ids, invalid poses,
  /// intrinsics or boxes, or detections naming objects absent from objects3d.
  void check() const;
};

/// Same-place thresholds; both must hold for two frames to share a place.
struct GtThresholds {
  double translation = 1.0;  // meters
  double rotation = 1.0;     // radians

  void check() const;
};

/// Ground-truth graph: PP edge iff both pose distances are within the
/// thresholds (inclusive), PO edge for every (frame, object) detection pair.
/// Objects are ordered by first appearance. Throws ValidationError on
/// anonymous detections.
MSGraph build_gt_graph(const SceneAnnotation& scene, const GtThresholds& th = {});

/// Copy of `scene` whose detections are regenerated by projecting every 3D
/// object into every frame. Throws ValidationError when objects3d is absent.
SceneAnnotation derive_detections(const SceneAnnotation& scene, const ProjectionParams& params = {});

/// Per-object, per-frame box track: tracks[k][t] is object k's box in frame t.
/// Duplicate detections of one object in a frame keep the largest box.
struct Tracks {
  std::vector<ObjectId> ids;  // ordered by first appearance
  std::vector<std::vector<std::optional<Box2>>> boxes;
};

/// Groups identified detections per frame into tracks. Anonymous detections
/// are rejected with ValidationError.
Tracks collect_tracks(const std::vector<std::vector<Detection>>& per_frame);

std::vector<std::vector<Detection>> detections_by_frame(const SceneAnnotation& scene);

}  // namespace msg
