#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "msg/association.hpp"
#include "msg/graph.hpp"

namespace msg {

/// Loss of an embedding pair with its gradient with respect to each input.
struct PairLoss {
  double loss = 0;
  Eigen::VectorXd grad_a;
  Eigen::VectorXd grad_b;
};

/// Squared error between cos(a, b) and the target (1 for the same place, 0
/// otherwise). Throws ValidationError on a zero-norm input.
PairLoss place_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool same_place);

struct ScalarLoss {
  double loss = 0;
  double grad = 0;  // d loss / d cos_sim
};

/// Weighted binary cross-entropy on p = sigmoid(scale * cos_sim). Log terms
/// are clamped at ln(1e-12).
ScalarLoss object_loss(double cos_sim, bool same_object, double positive_weight = 10.0, double scale = 10.0);

/// object_loss applied to cos(a, b), differentiated through the cosine.
PairLoss object_pair_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool same_object,
                          double positive_weight = 10.0, double scale = 10.0);

/// Coding rate 0.5 * logdet(I + d / (n eps^2) Z^T Z) of the n x d matrix Z.
/// Throws ValidationError on empty or non-finite Z or eps <= 0.
double coding_rate(const Eigen::MatrixXd& z, double eps = 0.5);
Eigen::MatrixXd coding_rate_gradient(const Eigen::MatrixXd& z, double eps = 0.5);

/// Largest relative deviation |g - fd| / (|g| + 1e-8) of the analytic
/// gradient `analytic` from central differences of `f` at `x`.
double grad_check(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& analytic,
                  const Eigen::VectorXd& x, double h = 1e-5);

struct Projector {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd bias;     // out_dim

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return weights * x + bias; }
  bool operator==(const Projector& o) const { return weights == o.weights && bias == o.bias; }
};

struct ProbeConfig {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  double learning_rate = 2e-5;
  double weight_decay = 0.01;
  std::size_t epochs = 30;
  std::size_t scenes_per_batch = 6;
  std::size_t frames_per_scene = 64;
  double positive_weight = 10.0;
  double place_loss_weight = 1.0;   // place : object loss ratio
  double object_loss_weight = 1.0;
  double bce_scale = 10.0;
  std::size_t max_pairs_per_step = 4096;
  bool cross_scene_negatives = true;
  double init_noise = 0.01;
  double coding_rate_eps = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void check() const;
};

/// Frozen embeddings of one scene with the labels that supervise the probe:
/// the gt graph provides same-place pairs, `object_labels[t][k]` the gt
/// identity of detection k in frame t (nullopt for detections without one).
struct ProbeScene {
  EmbeddingSet emb;
  MSGraph gt;
  std::vector<std::vector<std::optional<ObjectId>>> object_labels;
};

struct TrainedProbe {
  Projector place_head;
  Projector object_head;
  std::vector<double> epoch_loss;         // mean step loss per epoch
  std::vector<double> epoch_coding_rate;  // of projected object embeddings, last batch of each epoch
};

/// Seeded initialization: rectangular identity plus init_noise * N(0, 1), zero bias.
Projector init_projector(std::size_t in_dim, std::size_t out_dim, double init_noise, std::uint64_t seed);

/// Trains separate linear place and object heads over frozen embeddings with
/// AdamW (decoupled weight decay). Each step draws scenes_per_batch scenes and
/// up to frames_per_scene frames per scene. Deterministic for a fixed seed.
/// Throws ValidationError on fewer than two scenes or invalid config.
TrainedProbe train_probe(std::span<const ProbeScene> scenes, const ProbeConfig& cfg);

/// Projects every place embedding through the place head and every object
/// embedding through the object head.
EmbeddingSet apply_probe(const EmbeddingSet& emb, const Projector& place_head, const Projector& object_head);

}  // namespace msg
