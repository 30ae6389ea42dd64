#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "msg/graph.hpp"
#include "msg/scene.hpp"

namespace msg {

struct FrameEmbedding {
  PlaceId frame_id = 0;
  Eigen::VectorXd place;
  std::vector<Eigen::VectorXd> objects;  // one per detection, in detection order
};

struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<FrameEmbedding> frames;

  /// Throws ValidationError on wrong vector sizes, zero or non-finite vectors,
  /// or non-consecutive frame ids.
  void check() const;
};

enum class BankUpdate { running_mean, replace };

struct AssocConfig {
  double tau_place = 0.3;
  double tau_object = 0.2;
  BankUpdate bank_update = BankUpdate::running_mean;

  void check() const;
};

struct BankEntry {
  ObjectId id = 0;
  Eigen::VectorXd prototype;  // unit norm
  std::size_t count = 0;
};

/// Per-scene store of object prototypes. Ids are issued sequentially from 0.
class MemoryBank {
 public:
  const std::vector<BankEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  ObjectId register_object(const Eigen::VectorXd& unit_embedding);
  void update(std::size_t index, const Eigen::VectorXd& unit_embedding, BankUpdate mode);

 private:
  std::vector<BankEntry> entries_;
};

/// Symmetric cosine-similarity matrix of the place embeddings, unit diagonal.
Eigen::MatrixXd place_similarity(const EmbeddingSet& emb);

struct PlacePrediction {
  std::vector<PlaceEdge> edges;  // i < j with cosine >= tau_place
  Eigen::MatrixXd similarity;
};

PlacePrediction predict_pp(const EmbeddingSet& emb, const AssocConfig& cfg);

struct AssociationResult {
  std::vector<std::vector<ObjectId>> ids;  // ids[frame][detection]
  MemoryBank bank;
};

/// Online association in frame order. Each frame's detections are assigned
/// one-to-one to bank prototypes by maximum total cosine similarity; pairs
/// below tau_object are rejected and those detections register new objects.
AssociationResult associate_objects(const EmbeddingSet& emb, const AssocConfig& cfg);

struct GraphPrediction {
  MSGraph graph;
  std::vector<std::vector<Detection>> detections;  // boxes relabeled with predicted ids
  Eigen::MatrixXd similarity;
};

/// Predicted graph from embeddings plus the detection boxes they describe.
/// `frames[t]` must hold exactly as many detections as emb.frames[t].objects.
GraphPrediction build_pred_graph(const EmbeddingSet& emb, const AssocConfig& cfg,
                                 const std::vector<std::vector<Detection>>& frames);

}  // namespace msg
