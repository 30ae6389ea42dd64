#include "msg/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "msg/errors.hpp"

namespace msg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent streams per simulation stage, so that e.g. changing a noise
// level never perturbs the trajectory.
enum Stream : std::uint64_t { kTrajectory = 1, kObjects, kDetector, kPlaceNoise, kObjectLatents, kObjectNoise };

std::mt19937_64 stream_rng(std::uint64_t seed, Stream s) { return std::mt19937_64(splitmix64(seed ^ splitmix64(s))); }

Eigen::VectorXd gaussian(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

Eigen::VectorXd random_unit(std::size_t dim, std::mt19937_64& rng) {
  Eigen::VectorXd v;
  do {
    v = gaussian(dim, rng);
  } while (v.norm() == 0.0);
  return v.normalized();
}

// Isotropic Gaussian with expected squared norm sigma^2, independent of dim.
Eigen::VectorXd isotropic_noise(std::size_t dim, double sigma, std::mt19937_64& rng) {
  return gaussian(dim, rng) * (sigma / std::sqrt(static_cast<double>(dim)));
}

Eigen::MatrixXd random_orthogonal(std::size_t dim, std::mt19937_64& rng) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (Eigen::Index c = 0; c < g.cols(); ++c) g.col(c) = gaussian(dim, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
}

Eigen::Quaterniond camera_rotation(double yaw, double pitch) {
  const Eigen::Vector3d forward(std::cos(yaw) * std::cos(pitch), std::sin(yaw) * std::cos(pitch), -std::sin(pitch));
  const Eigen::Vector3d right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return Eigen::Quaterniond(r).normalized();
}


}  // namespace

Eigen::MatrixXd object_distortion_matrix(const SimConfig& cfg) {
  std::mt19937_64 rng(splitmix64(cfg.encoder_seed ^ 0xd15ea5eULL));
  const Eigen::MatrixXd q1 = random_orthogonal(cfg.dim, rng);
  const Eigen::MatrixXd q2 = random_orthogonal(cfg.dim, rng);
  Eigen::VectorXd s(static_cast<Eigen::Index>(cfg.dim));
  const double denom = cfg.dim > 1 ? static_cast<double>(cfg.dim - 1) : 1.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = std::pow(cfg.object_distortion, -static_cast<double>(i) / denom);
  return q1 * s.asDiagonal() * q2.transpose();
}

std::uint64_t scene_seed(std::uint64_t base, std::uint64_t index) { return base ^ index; }

void SimConfig::check() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ValidationError("invalid config field '" + field + "': " + why);
  };
  if (!(room_half_size > 0.5)) fail("room_half_size", "must exceed 0.5");
  if (n_frames == 0) fail("n_frames", "must be positive");
  if (n_objects == 0) fail("n_objects", "must be positive");
  if (!(step >= 0)) fail("step", "must be non-negative");
  if (!(heading_jitter >= 0)) fail("heading_jitter", "must be non-negative");
  if (!(camera_height > 0)) fail("camera_height", "must be positive");
  if (dim == 0) fail("dim", "must be positive");
  if (!(sigma_place >= 0)) fail("sigma_place", "must be non-negative");
  if (!(sigma_object >= 0)) fail("sigma_object", "must be non-negative");
  if (!(detector.drop_prob >= 0 && detector.drop_prob <= 1)) fail("detector.drop_prob", "must lie in [0,1]");
  if (!(detector.jitter_px >= 0)) fail("detector.jitter_px", "must be non-negative");
  if (!(detector.spurious_rate >= 0)) fail("detector.spurious_rate", "must be non-negative");
  if (!(smooth_target_cosine > 0 && smooth_target_cosine < 1)) fail("smooth_target_cosine", "must lie in (0,1)");
  if (!(object_distortion >= 0)) fail("object_distortion", "must be non-negative");
  if (place_mode == PlaceMode::oracle && dim < n_frames) fail("dim", "oracle place mode needs dim >= n_frames");
  try {
    thresholds.check();
    intrinsics.check();
  } catch (const ValidationError& e) {
    fail("thresholds/intrinsics", e.what());
  }
}

GeneratedScene generate_scene(const SimConfig& cfg) {
  cfg.check();
  GeneratedScene out;
  out.scene.scene_id = "sim-" + std::to_string(cfg.seed);
  const double r = cfg.room_half_size;

  // Objects resting on the floor or on furniture-height surfaces.
  {
    auto rng = stream_rng(cfg.seed, kObjects);
    std::uniform_real_distribution<double> pos(-r + 0.5, r - 0.5), ext(0.15, 0.5), lift(0.0, 0.8),
        yaw(-std::numbers::pi, std::numbers::pi);
    std::vector<Object3d> objects;
    for (std::size_t k = 0; k < cfg.n_objects; ++k) {
      Object3d o;
      o.object_id = static_cast<ObjectId>(k);
      o.box.half_extents = Eigen::Vector3d(ext(rng), ext(rng), ext(rng));
      o.box.center = Eigen::Vector3d(pos(rng), pos(rng), o.box.half_extents.z() + lift(rng));
      o.box.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw(rng), Eigen::Vector3d::UnitZ()));
      o.label = "object_" + std::to_string(k);
      objects.push_back(std::move(o));
    }
    out.scene.objects3d = std::move(objects);
  }

  // Random walk that turns back at the walls.
  {
    auto rng = stream_rng(cfg.seed, kTrajectory);
    std::uniform_real_distribution<double> pos(-r + 0.5, r - 0.5), yaw0(-std::numbers::pi, std::numbers::pi),
        jitter(-cfg.heading_jitter, cfg.heading_jitter);
    Eigen::Vector2d p(pos(rng), pos(rng));
    double yaw = yaw0(rng);
    for (std::size_t t = 0; t < cfg.n_frames; ++t) {
      if (t > 0) {
        yaw += jitter(rng);
        Eigen::Vector2d next = p + cfg.step * Eigen::Vector2d(std::cos(yaw), std::sin(yaw));
        if (std::abs(next.x()) > r || std::abs(next.y()) > r) {
          yaw += std::numbers::pi;
          next = p + cfg.step * Eigen::Vector2d(std::cos(yaw), std::sin(yaw));
        }
        p = next;
      }
      Frame f;
      f.frame_id = static_cast<PlaceId>(t);
      f.pose = Pose::make(camera_rotation(yaw, cfg.camera_pitch), Eigen::Vector3d(p.x(), p.y(), cfg.camera_height));
      f.intrinsics = cfg.intrinsics;
      out.scene.frames.push_back(std::move(f));
    }
  }

  out.scene = derive_detections(out.scene, cfg.projection);

  // Detector stream: drops, jitter, spurious boxes; identities removed.
  auto rng = stream_rng(cfg.seed, kDetector);
  std::bernoulli_distribution drop(cfg.detector.drop_prob);
  std::uniform_real_distribution<double> jitter(-cfg.detector.jitter_px, cfg.detector.jitter_px);
  std::poisson_distribution<int> spurious(cfg.detector.spurious_rate);
  const double w = cfg.intrinsics.width, h = cfg.intrinsics.height;
  std::uniform_real_distribution<double> sx(0.0, w), sy(0.0, h), ssize(10.0, 80.0);

  out.pred_scene = out.scene;
  out.pred_scene.scene_id = out.scene.scene_id;
  out.pred_scene.objects3d.reset();
  out.pred_sources.resize(out.scene.frames.size());
  for (std::size_t t = 0; t < out.scene.frames.size(); ++t) {
    auto& dets = out.pred_scene.frames[t].detections;
    dets.clear();
    for (const auto& d : out.scene.frames[t].detections) {
      if (cfg.detector.drop_prob > 0 && drop(rng)) continue;
      Box2 b = d.box;
      if (cfg.detector.jitter_px > 0) {
        b.x1 = std::clamp(b.x1 + jitter(rng), 0.0, w);
        b.y1 = std::clamp(b.y1 + jitter(rng), 0.0, h);
        b.x2 = std::clamp(b.x2 + jitter(rng), 0.0, w);
        b.y2 = std::clamp(b.y2 + jitter(rng), 0.0, h);
        if (!b.valid() || b.area() < 1.0) continue;
      }
      dets.push_back({std::nullopt, b, std::nullopt});
      out.pred_sources[t].push_back(d.object_id);
    }
    const int n_spurious = cfg.detector.spurious_rate > 0 ? spurious(rng) : 0;
    for (int k = 0; k < n_spurious; ++k) {
      const double bw = ssize(rng), bh = ssize(rng);
      const double x1 = std::min(sx(rng), w - bw), y1 = std::min(sy(rng), h - bh);
      dets.push_back({std::nullopt, Box2{std::max(0.0, x1), std::max(0.0, y1), std::max(0.0, x1) + bw,
                                         std::max(0.0, y1) + bh},
                      std::nullopt});
      out.pred_sources[t].push_back(std::nullopt);
    }
  }
  return out;
}

OraclePlaces plant_place_embeddings_oracle(const MSGraph& gt, std::size_t dim) {
  const std::size_t n = gt.num_places();
  if (dim < n) {
    throw ValidationError("oracle place embeddings need dim >= number of places (" + std::to_string(dim) + " < " +
                          std::to_string(n) + ")");
  }
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [i, j] : gt.pp_edges()) {
    ++degree[i];
    ++degree[j];
  }
  const std::size_t max_degree = n ? *std::max_element(degree.begin(), degree.end()) : 0;
  const double beta = 0.9 / static_cast<double>(std::max<std::size_t>(1, max_degree));

  // Strictly diagonally dominant, hence positive definite.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& [i, j] : gt.pp_edges()) {
    gram(i, j) = beta;
    gram(j, i) = beta;
  }
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(gram).matrixL();

  OraclePlaces out;
  out.tau = beta / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    e.head(static_cast<Eigen::Index>(n)) = l.row(static_cast<Eigen::Index>(i)).transpose();
    out.embeddings.push_back(std::move(e));
  }
  return out;
}

std::vector<Eigen::VectorXd> plant_place_embeddings_smooth(const SceneAnnotation& scene, const SimConfig& cfg) {
  // Gaussian kernel exp(-|dp|^2 / 2 lt^2 - |dR|_F^2 / 2 lr^2); |dR|_F of a
  // geodesic angle theta is 2 sqrt(2) sin(theta / 2).
  const double log_target = std::sqrt(-2.0 * std::log(cfg.smooth_target_cosine));
  const double lt = cfg.thresholds.translation / log_target;
  const double lr = 2.0 * std::numbers::sqrt2 * std::sin(cfg.thresholds.rotation / 2.0) / log_target;

  std::mt19937_64 feature_rng(splitmix64(cfg.encoder_seed ^ 0xfea7u));
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  Eigen::MatrixXd omega(d, 12);
  for (Eigen::Index c = 0; c < omega.cols(); ++c) omega.col(c) = gaussian(cfg.dim, feature_rng);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Eigen::VectorXd offset(d);
  for (Eigen::Index i = 0; i < d; ++i) offset[i] = phase(feature_rng);

  auto noise_rng = stream_rng(cfg.seed, kPlaceNoise);
  std::vector<Eigen::VectorXd> out;
  out.reserve(scene.frames.size());
  for (const auto& f : scene.frames) {
    Eigen::Matrix<double, 12, 1> x;
    x.head<3>() = f.pose.translation / lt;
    const Eigen::Matrix3d rot = f.pose.rotation.toRotationMatrix();
    x.tail<9>() = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(rot.data()) / lr;
    Eigen::VectorXd phi = std::sqrt(2.0 / static_cast<double>(d)) * (omega * x + offset).array().cos().matrix();
    if (cfg.sigma_place > 0) phi += isotropic_noise(cfg.dim, cfg.sigma_place, noise_rng);
    out.push_back(phi.normalized());
  }
  return out;
}

ObjectEmbeddings plant_object_embeddings(const std::vector<std::vector<std::optional<ObjectId>>>& sources,
                                         const SimConfig& cfg) {
  ObjectEmbeddings out;
  auto latent_rng = stream_rng(cfg.seed, kObjectLatents);
  auto noise_rng = stream_rng(cfg.seed, kObjectNoise);

  std::vector<Eigen::VectorXd> latents;
  if (cfg.n_objects <= cfg.dim) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(cfg.dim), static_cast<Eigen::Index>(cfg.n_objects));
    for (Eigen::Index c = 0; c < g.cols(); ++c) g.col(c) = gaussian(cfg.dim, latent_rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    for (Eigen::Index c = 0; c < q.cols(); ++c) latents.push_back(q.col(c));
  } else {
    out.orthogonal_latents = false;
    for (std::size_t k = 0; k < cfg.n_objects; ++k) latents.push_back(random_unit(cfg.dim, latent_rng));
  }

  const bool distort = cfg.object_distortion > 1.0;
  const Eigen::MatrixXd m = distort ? object_distortion_matrix(cfg) : Eigen::MatrixXd();

  out.per_frame.resize(sources.size());
  for (std::size_t t = 0; t < sources.size(); ++t) {
    for (const auto& src : sources[t]) {
      Eigen::VectorXd e;
      if (src) {
        if (*src >= latents.size()) throw ValidationError("detection source " + std::to_string(*src) + " out of range");
        e = latents[*src];
      } else {
        e = random_unit(cfg.dim, latent_rng);
      }
      if (cfg.sigma_object > 0) e += isotropic_noise(cfg.dim, cfg.sigma_object, noise_rng);
      if (distort) e = m * e;
      out.per_frame[t].push_back(e.normalized());
    }
  }
  return out;
}

SimScene simulate(const SimConfig& cfg) {
  SimScene s;
  s.streams = generate_scene(cfg);
  s.gt = build_gt_graph(s.streams.scene, cfg.thresholds);

  std::vector<Eigen::VectorXd> places;
  if (cfg.place_mode == PlaceMode::oracle) {
    auto oracle = plant_place_embeddings_oracle(s.gt, cfg.dim);
    s.oracle_tau_place = oracle.tau;
    places = std::move(oracle.embeddings);
    if (cfg.sigma_place > 0) {
      auto rng = stream_rng(cfg.seed, kPlaceNoise);
      for (auto& e : places) e = (e + isotropic_noise(cfg.dim, cfg.sigma_place, rng)).normalized();
    }
  } else {
    places = plant_place_embeddings_smooth(s.streams.scene, cfg);
  }
  auto objects = plant_object_embeddings(s.streams.pred_sources, cfg);
  s.orthogonal_latents = objects.orthogonal_latents;

  s.emb.dim = cfg.dim;
  for (std::size_t t = 0; t < places.size(); ++t) {
    s.emb.frames.push_back({static_cast<PlaceId>(t), std::move(places[t]), std::move(objects.per_frame[t])});
  }
  return s;
}

EndToEnd run_end_to_end(const SimConfig& cfg, const AssocConfig& assoc) {
  EndToEnd out{simulate(cfg), {}, {}};
  AssocConfig effective = assoc;
  if (out.sim.oracle_tau_place) effective.tau_place = *out.sim.oracle_tau_place;
  out.prediction = build_pred_graph(out.sim.emb, effective, detections_by_frame(out.sim.streams.pred_scene));
  std::optional<Eigen::MatrixXd> similarity;
  if (!out.sim.gt.pp_edges().empty()) similarity = out.prediction.similarity;
  out.report = evaluate(out.sim.gt, out.prediction.graph, out.sim.streams.scene, out.prediction.detections, similarity);
  return out;
}

}  // namespace msg
