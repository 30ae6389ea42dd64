#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "msg/association.hpp"
#include "msg/metrics.hpp"
#include "msg/scene.hpp"

namespace msg {

enum class PlaceMode { oracle, smooth };

struct DetectorNoise {
  double drop_prob = 0.0;
  double jitter_px = 0.0;      // uniform per-coordinate box jitter
  double spurious_rate = 0.0;  // expected false positives per frame (Poisson)
};

struct SimConfig {
  std::uint64_t seed = 0;
  double room_half_size = 4.0;  // meters
  std::size_t n_frames = 48;
  std::size_t n_objects = 12;
  double step = 0.3;             // meters per frame
  double heading_jitter = 0.35;  // radians per frame
  double camera_height = 1.4;
  double camera_pitch = 0.25;  // radians below horizontal
  std::size_t dim = 64;
  PlaceMode place_mode = PlaceMode::oracle;
  double sigma_place = 0.0;
  double sigma_object = 0.0;
  DetectorNoise detector;
  GtThresholds thresholds;
  // Mean place cosine at exactly one threshold distance (smooth mode).
  double smooth_target_cosine = 0.3;
  // Condition number of a fixed linear distortion applied to object
  // embeddings; values <= 1 disable it.
  double object_distortion = 0.0;
  // Seeds the parts shared by every scene (the smooth-mode feature map and
  // the object distortion), standing in for a fixed encoder.
  std::uint64_t encoder_seed = 7;
  Intrinsics intrinsics;
  ProjectionParams projection;

  /// Throws ValidationError naming the first invalid field.
  void check() const;
};

/// Both detection streams of a simulated scene. `scene` holds clean,
/// identified detections; `pred_scene` holds the corrupted detector output
/// (anonymous, with spurious boxes), whose true sources are in `pred_sources`.
struct GeneratedScene {
  SceneAnnotation scene;
  SceneAnnotation pred_scene;
  std::vector<std::vector<std::optional<ObjectId>>> pred_sources;
};

GeneratedScene generate_scene(const SimConfig& cfg);

struct OraclePlaces {
  std::vector<Eigen::VectorXd> embeddings;
  double tau = 0;
};

/// Plants place embeddings whose Gram matrix is I + beta * A_pp with
/// beta = 0.9 / max(1, max degree), so cosines are exactly beta on edges and
/// 0 elsewhere and thresholding at beta / 2 recovers A_pp. Throws
/// ValidationError when dim < number of places.
OraclePlaces plant_place_embeddings_oracle(const MSGraph& gt, std::size_t dim);

/// Random Fourier features of (position, rotation) plus isotropic noise of
/// expected norm sigma_place, normalized. The bandwidths put the expected
/// cosine at smooth_target_cosine for a pose pair exactly one translation (or
/// rotation) threshold apart.
std::vector<Eigen::VectorXd> plant_place_embeddings_smooth(const SceneAnnotation& scene, const SimConfig& cfg);

/// The fixed object distortion Q1 diag(kappa^(-i/(dim-1))) Q2^T, seeded by
/// encoder_seed, with kappa = object_distortion.
Eigen::MatrixXd object_distortion_matrix(const SimConfig& cfg);

struct ObjectEmbeddings {
  std::vector<std::vector<Eigen::VectorXd>> per_frame;  // aligned with the detection stream
  bool orthogonal_latents = true;  // false when n_objects > dim
};

/// One latent per object (orthonormal when n_objects <= dim, independent
/// random unit vectors otherwise) and a fresh random latent per spurious
/// detection; each detection gets normalize(latent + noise) with noise of
/// expected norm sigma_object, passed through the distortion if enabled.
ObjectEmbeddings plant_object_embeddings(const std::vector<std::vector<std::optional<ObjectId>>>& sources,
                                         const SimConfig& cfg);

struct SimScene {
  GeneratedScene streams;
  MSGraph gt;
  EmbeddingSet emb;  // aligned with streams.pred_scene
  std::optional<double> oracle_tau_place;
  bool orthogonal_latents = true;
};

SimScene simulate(const SimConfig& cfg);

struct EndToEnd {
  SimScene sim;
  GraphPrediction prediction;
  EvalReport report;
};

/// generate -> plant -> build_pred_graph -> evaluate. In oracle place mode the
/// planted tau replaces assoc.tau_place. Recall@1 is left absent when the gt
/// graph has no place edges.
EndToEnd run_end_to_end(const SimConfig& cfg, const AssocConfig& assoc = {});

/// Seed of scene `index` in a batch: base xor index.
std::uint64_t scene_seed(std::uint64_t base, std::uint64_t index);

}  // namespace msg
