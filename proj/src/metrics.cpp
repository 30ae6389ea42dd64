#include "msg/metrics.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "msg/assignment.hpp"
#include "msg/errors.hpp"

namespace msg {

double IouCounts::fraction() const {
  const std::size_t denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

IouCounts graph_iou(std::vector<Edge> gt, std::vector<Edge> pred) {
  std::sort(gt.begin(), gt.end());
  gt.erase(std::unique(gt.begin(), gt.end()), gt.end());
  std::sort(pred.begin(), pred.end());
  pred.erase(std::unique(pred.begin(), pred.end()), pred.end());

  IouCounts c;
  auto g = gt.begin();
  auto p = pred.begin();
  while (g != gt.end() && p != pred.end()) {
    if (*g == *p) {
      ++c.tp;
      ++g;
      ++p;
    } else if (*g < *p) {
      ++c.fn;
      ++g;
    } else {
      ++c.fp;
      ++p;
    }
  }
  c.fn += static_cast<std::size_t>(gt.end() - g);
  c.fp += static_cast<std::size_t>(pred.end() - p);
  return c;
}

double adjacency_iou(const BinaryMatrix& a, const BinaryMatrix& b) {
  const std::size_t m = std::min(a.rows(), b.rows());
  const std::size_t n = std::min(a.cols(), b.cols());
  std::size_t both = 0, either = 0, overlap_a = 0, overlap_b = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      both += (a(i, j) && b(i, j));
      either += (a(i, j) || b(i, j));
      overlap_a += a(i, j);
      overlap_b += b(i, j);
    }
  }
  const std::size_t w_a = a.count_ones() - overlap_a;
  const std::size_t w_b = b.count_ones() - overlap_b;
  const std::size_t denom = either + w_a + w_b;
  return denom == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(denom);
}

namespace {

IouScore to_score(const IouCounts& c) { return {100.0 * c.fraction(), c}; }

void require_same_places(const MSGraph& gt, const MSGraph& pred) {
  if (gt.num_places() != pred.num_places()) {
    throw ValidationError("place-count mismatch: gt has " + std::to_string(gt.num_places()) + ", prediction has " +
                          std::to_string(pred.num_places()));
  }
}

}  // namespace

IouScore pp_iou(const MSGraph& gt, const MSGraph& pred) {
  require_same_places(gt, pred);
  auto edges = [](const MSGraph& g) {
    std::vector<Edge> out;
    out.reserve(g.pp_edges().size());
    for (const auto& [i, j] : g.pp_edges()) out.emplace_back(i, j);
    return out;
  };
  return to_score(graph_iou(edges(gt), edges(pred)));
}

MatchScore pair_match_score(std::span<const std::optional<Box2>> gt_track,
                            std::span<const std::optional<Box2>> pred_track) {
  if (gt_track.size() != pred_track.size()) throw ValidationError("tracks cover different frame counts");
  MatchScore s;
  for (std::size_t t = 0; t < gt_track.size(); ++t) {
    const bool g = gt_track[t].has_value();
    const bool p = pred_track[t].has_value();
    if (g && p) s.accumulated_giou += giou(*gt_track[t], *pred_track[t]);
    s.union_frames += (g || p);
  }
  if (s.union_frames == 0) throw ValidationError("empty objects: neither track appears in any frame");
  s.score = s.accumulated_giou / static_cast<double>(s.union_frames);
  return s;
}

Eigen::MatrixXd match_score_matrix(const Tracks& gt, const Tracks& pred) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(gt.ids.size()), static_cast<Eigen::Index>(pred.ids.size()));
  for (std::size_t i = 0; i < gt.ids.size(); ++i) {
    for (std::size_t j = 0; j < pred.ids.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          pair_match_score(gt.boxes[i], pred.boxes[j]).score;
    }
  }
  return m;
}

ObjectMatching match_tracks(const Tracks& gt, const Tracks& pred) {
  const Eigen::MatrixXd scores = match_score_matrix(gt, pred);
  const Assignment assignment = solve_assignment(Eigen::MatrixXd::Ones(scores.rows(), scores.cols()) - scores);

  ObjectMatching out;
  std::vector<char> gt_done(gt.ids.size(), 0), pred_done(pred.ids.size(), 0);
  for (const auto& [r, c] : assignment.pairs) {
    const double m = scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    if (m <= 0.0) continue;
    out.pairs.push_back({gt.ids[r], pred.ids[c], m});
    gt_done[r] = 1;
    pred_done[c] = 1;
  }
  for (std::size_t i = 0; i < gt.ids.size(); ++i) {
    if (!gt_done[i]) out.unmatched_gt.push_back(gt.ids[i]);
  }
  for (std::size_t j = 0; j < pred.ids.size(); ++j) {
    if (!pred_done[j]) out.unmatched_pred.push_back(pred.ids[j]);
  }
  return out;
}

ObjectMatching match_objects(const SceneAnnotation& gt_scene, const std::vector<std::vector<Detection>>& pred_dets) {
  if (pred_dets.size() != gt_scene.frames.size()) {
    throw ValidationError("predicted detections cover " + std::to_string(pred_dets.size()) +
                          " frames, scene has " + std::to_string(gt_scene.frames.size()));
  }
  return match_tracks(collect_tracks(detections_by_frame(gt_scene)), collect_tracks(pred_dets));
}

IouScore po_iou(const MSGraph& gt, const MSGraph& pred, const ObjectMatching& matching) {
  require_same_places(gt, pred);

  // Aligned object universe: gt objects keep their ordinal, unmatched
  // predicted objects are appended after all gt objects.
  std::unordered_map<ObjectId, std::uint64_t> pred_vertex;
  std::unordered_set<ObjectId> used_gt;
  for (const auto& p : matching.pairs) {
    const auto gk = gt.object_ordinal(p.gt);
    if (!gk) throw ValidationError("matching references unknown gt object " + std::to_string(p.gt));
    if (!pred.object_ordinal(p.pred)) {
      throw ValidationError("matching references unknown predicted object " + std::to_string(p.pred));
    }
    if (!used_gt.insert(p.gt).second || !pred_vertex.emplace(p.pred, *gk).second) {
      throw ValidationError("matching is not one-to-one");
    }
  }
  const std::uint64_t offset = gt.num_objects();
  for (std::size_t k = 0; k < pred.num_objects(); ++k) {
    pred_vertex.try_emplace(pred.objects()[k].id, offset + k);
  }

  std::vector<Edge> gt_edges, pred_edges;
  gt_edges.reserve(gt.po_edges().size());
  pred_edges.reserve(pred.po_edges().size());
  for (const auto& [p, o] : gt.po_edges()) gt_edges.emplace_back(p, *gt.object_ordinal(o));
  for (const auto& [p, o] : pred.po_edges()) pred_edges.emplace_back(p, pred_vertex.at(o));
  return to_score(graph_iou(std::move(gt_edges), std::move(pred_edges)));
}

double recall_at_1(const Eigen::MatrixXd& similarity, const MSGraph& gt) {
  const auto n = static_cast<Eigen::Index>(gt.num_places());
  if (similarity.rows() != n || similarity.cols() != n) {
    throw ValidationError("similarity matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (!similarity.allFinite()) throw ValidationError("similarity matrix has non-finite entries");

  std::vector<std::unordered_set<PlaceId>> neighbors(gt.num_places());
  for (const auto& [i, j] : gt.pp_edges()) {
    neighbors[i].insert(j);
    neighbors[j].insert(i);
  }
  std::size_t queries = 0, hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (neighbors[static_cast<std::size_t>(i)].empty()) continue;
    ++queries;
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (best < 0 || similarity(i, j) > similarity(i, best)) best = j;
    }
    hits += neighbors[static_cast<std::size_t>(i)].contains(static_cast<PlaceId>(best));
  }
  if (queries == 0) throw ValidationError("recall undefined: no query image has a same-place neighbor");
  return 100.0 * static_cast<double>(hits) / static_cast<double>(queries);
}

EvalReport evaluate(const MSGraph& gt, const MSGraph& pred, const SceneAnnotation& gt_scene,
                    const std::vector<std::vector<Detection>>& pred_dets,
                    const std::optional<Eigen::MatrixXd>& similarity) {
  if (gt_scene.frames.size() != gt.num_places()) {
    throw ValidationError("gt scene frame count differs from gt graph place count");
  }
  EvalReport r;
  const auto pp = pp_iou(gt, pred);
  r.pp_iou = pp.percent;
  r.pp = pp.counts;
  r.matching = match_objects(gt_scene, pred_dets);
  const auto po = po_iou(gt, pred, r.matching);
  r.po_iou = po.percent;
  r.po = po.counts;
  if (similarity) r.recall_at_1 = recall_at_1(*similarity, gt);
  return r;
}

MeanReport mean_report(std::span<const EvalReport> reports) {
  MeanReport mean;
  mean.num_scenes = reports.size();
  if (reports.empty()) return mean;
  double recall_sum = 0;
  std::size_t recall_n = 0;
  for (const auto& r : reports) {
    mean.pp_iou += r.pp_iou;
    mean.po_iou += r.po_iou;
    if (r.recall_at_1) {
      recall_sum += *r.recall_at_1;
      ++recall_n;
    }
  }
  mean.pp_iou /= static_cast<double>(reports.size());
  mean.po_iou /= static_cast<double>(reports.size());
  if (recall_n > 0) mean.recall_at_1 = recall_sum / static_cast<double>(recall_n);
  return mean;
}

}  // namespace msg
