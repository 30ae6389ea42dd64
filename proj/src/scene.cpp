#include "msg/scene.hpp"

#include <string>
#include <unordered_map>
#include <unordered_set>

#include "msg/errors.hpp"

namespace msg {

void SceneAnnotation::check() const {
  std::unordered_set<ObjectId> known;
  if (objects3d) {
    for (const auto& obj : *objects3d) {
      obj.box.check();
      if (!known.insert(obj.object_id).second) {
        throw ValidationError("duplicate object_id " + std::to_string(obj.object_id) + " in objects3d");
      }
    }
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (f.frame_id != i) {
      throw ValidationError("frame ids must be consecutive from 0 (frame " + std::to_string(i) + " has id " +
                            std::to_string(f.frame_id) + ")");
    }
    Pose::make(f.pose.rotation, f.pose.translation);
    f.intrinsics.check();
    for (const auto& d : f.detections) {
      if (!d.box.valid()) throw ValidationError("invalid box in frame " + std::to_string(i));
      if (d.score && !(*d.score >= 0.0 && *d.score <= 1.0)) {
        throw ValidationError("detection score outside [0,1] in frame " + std::to_string(i));
      }
      if (objects3d && d.object_id && !known.contains(*d.object_id)) {
        throw ValidationError("detection references object " + std::to_string(*d.object_id) +
                              " missing from objects3d");
      }
    }
  }
}

void GtThresholds::check() const {
  if (!(translation >= 0) || !(rotation >= 0)) throw ValidationError("gt thresholds must be non-negative");
}

MSGraph build_gt_graph(const SceneAnnotation& scene, const GtThresholds& th) {
  GraphData g;
  g.num_places = scene.frames.size();

  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.frames.size(); ++j) {
      const auto d = relative_pose_distance(scene.frames[i].pose, scene.frames[j].pose);
      if (d.translation <= th.translation && d.rotation <= th.rotation) {
        g.pp_edges.emplace_back(static_cast<PlaceId>(i), static_cast<PlaceId>(j));
      }
    }
  }

  std::unordered_map<ObjectId, std::string> labels;
  if (scene.objects3d) {
    for (const auto& o : *scene.objects3d) labels[o.object_id] = o.label;
  }
  std::unordered_set<ObjectId> registered;
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    std::unordered_set<ObjectId> in_frame;
    for (const auto& d : scene.frames[i].detections) {
      if (!d.object_id) throw ValidationError("anonymous detection in GT build (frame " + std::to_string(i) + ")");
      const ObjectId id = *d.object_id;
      if (registered.insert(id).second) {
        const auto it = labels.find(id);
        g.objects.push_back({id, it == labels.end() ? std::nullopt : std::optional<std::string>(it->second)});
      }
      if (in_frame.insert(id).second) g.po_edges.emplace_back(static_cast<PlaceId>(i), id);
    }
  }
  return MSGraph::create(std::move(g));
}

SceneAnnotation derive_detections(const SceneAnnotation& scene, const ProjectionParams& params) {
  if (!scene.objects3d) throw ValidationError("derive_detections requires objects3d");
  SceneAnnotation out = scene;
  for (auto& frame : out.frames) {
    frame.detections.clear();
    for (const auto& obj : *scene.objects3d) {
      if (auto box = project_box3(obj.box, frame.pose, frame.intrinsics, params)) {
        frame.detections.push_back({obj.object_id, *box, std::nullopt});
      }
    }
  }
  return out;
}

Tracks collect_tracks(const std::vector<std::vector<Detection>>& per_frame) {
  Tracks tracks;
  std::unordered_map<ObjectId, std::size_t> index;
  for (std::size_t t = 0; t < per_frame.size(); ++t) {
    for (const auto& d : per_frame[t]) {
      if (!d.object_id) throw ValidationError("anonymous detection in track (frame " + std::to_string(t) + ")");
      auto [it, inserted] = index.try_emplace(*d.object_id, tracks.ids.size());
      if (inserted) {
        tracks.ids.push_back(*d.object_id);
        tracks.boxes.emplace_back(per_frame.size());
      }
      auto& slot = tracks.boxes[it->second][t];
      if (!slot || d.box.area() > slot->area()) slot = d.box;
    }
  }
  return tracks;
}

std::vector<std::vector<Detection>> detections_by_frame(const SceneAnnotation& scene) {
  std::vector<std::vector<Detection>> out;
  out.reserve(scene.frames.size());
  for (const auto& f : scene.frames) out.push_back(f.detections);
  return out;
}

}  // namespace msg
