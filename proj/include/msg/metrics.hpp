#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "msg/graph.hpp"
#include "msg/scene.hpp"

namespace msg {

/// Confusion counts of an edge prediction; a positive is the presence of an edge.
struct IouCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  /// TP / (TP + FP + FN); 1.0 when both edge sets are empty.
  double fraction() const;
  bool operator==(const IouCounts&) const = default;
};

/// An edge between two vertices of an aligned vertex universe: matched
/// vertices share an id across both graphs, unmatched ones have ids that only
/// occur on their own side.
using Edge = std::pair<std::uint64_t, std::uint64_t>;

/// Edge-set IoU. Duplicates within either list are ignored.
IouCounts graph_iou(std::vector<Edge> gt, std::vector<Edge> pred);

/// Block-matrix IoU of two binary adjacency matrices whose leading
/// min(rows) x min(cols) region holds the matched vertices. Every 1-entry
/// outside that region belongs to an unmatched vertex and enters the
/// denominator (the w_A / w_B terms). Returns 1.0 when both are all-zero.
double adjacency_iou(const BinaryMatrix& a, const BinaryMatrix& b);

struct IouScore {
  double percent = 0;
  IouCounts counts;
};

/// Place-place IoU with identity place alignment. Throws ValidationError on a
/// place-count mismatch.
IouScore pp_iou(const MSGraph& gt, const MSGraph& pred);

struct MatchScore {
  double accumulated_giou = 0;  // c
  std::size_t union_frames = 0; // u
  double score = 0;             // m = c / u
};

/// Accumulated GIoU over co-present frames normalized by the number of frames
/// in which either object appears. Both tracks are indexed by frame and must
/// have equal length. Throws ValidationError if neither object ever appears.
MatchScore pair_match_score(std::span<const std::optional<Box2>> gt_track,
                            std::span<const std::optional<Box2>> pred_track);

struct MatchPair {
  ObjectId gt = 0;
  ObjectId pred = 0;
  double score = 0;

  bool operator==(const MatchPair&) const = default;
};

struct ObjectMatching {
  std::vector<MatchPair> pairs;        // sorted by gt track order
  std::vector<ObjectId> unmatched_gt;  // in first-appearance order
  std::vector<ObjectId> unmatched_pred;

  bool operator==(const ObjectMatching&) const = default;
};

/// m-score matrix between every gt track (rows) and pred track (columns).
Eigen::MatrixXd match_score_matrix(const Tracks& gt, const Tracks& pred);

/// One-to-one truth-to-result matching: Hungarian assignment on 1 - m, with
/// assigned pairs of m <= 0 moved to the unmatched lists.
ObjectMatching match_tracks(const Tracks& gt, const Tracks& pred);

/// Matches gt scene detections against predicted detections, whose object_id
/// holds the predicted identity. Frame counts must agree.
ObjectMatching match_objects(const SceneAnnotation& gt_scene, const std::vector<std::vector<Detection>>& pred_dets);

/// Place-object IoU after renaming matched predicted objects to their gt
/// partners; edges of unmatched objects on either side count as FP or FN.
/// Throws ValidationError on place-count mismatch or unknown ids in `matching`.
IouScore po_iou(const MSGraph& gt, const MSGraph& pred, const ObjectMatching& matching);

/// Percentage of queries (rows with at least one gt place neighbor) whose most
/// similar other image is a gt neighbor. Ties go to the lowest column index.
/// Throws ValidationError if the matrix shape is wrong or no query has a neighbor.
double recall_at_1(const Eigen::MatrixXd& similarity, const MSGraph& gt);

struct EvalReport {
  std::optional<double> recall_at_1;
  double pp_iou = 0;
  double po_iou = 0;
  IouCounts pp;
  IouCounts po;
  ObjectMatching matching;
};

EvalReport evaluate(const MSGraph& gt, const MSGraph& pred, const SceneAnnotation& gt_scene,
                    const std::vector<std::vector<Detection>>& pred_dets,
                    const std::optional<Eigen::MatrixXd>& similarity = std::nullopt);

struct MeanReport {
  std::optional<double> recall_at_1;  // mean over scenes that report recall
  double pp_iou = 0;
  double po_iou = 0;
  std::size_t num_scenes = 0;
};

/// Unweighted per-scene mean.
MeanReport mean_report(std::span<const EvalReport> reports);

}  // namespace msg
