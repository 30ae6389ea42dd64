#include "msg/embedlab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Cholesky>

#include "msg/errors.hpp"

namespace msg {

namespace {

struct Cosine {
  double value = 0;
  Eigen::VectorXd grad_a;
  Eigen::VectorXd grad_b;
};

Cosine cosine_with_grad(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine of a zero-norm vector");
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different sizes");
  Cosine c;
  c.value = a.dot(b) / (na * nb);
  c.grad_a = b / (na * nb) - c.value * a / (na * na);
  c.grad_b = a / (na * nb) - c.value * b / (nb * nb);
  return c;
}

double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

const double kLogClamp = std::log(1e-12);

}  // namespace

PairLoss place_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool same_place) {
  const Cosine c = cosine_with_grad(a, b);
  const double target = same_place ? 1.0 : 0.0;
  const double r = c.value - target;
  return {r * r, 2.0 * r * c.grad_a, 2.0 * r * c.grad_b};
}

ScalarLoss object_loss(double cos_sim, bool same_object, double positive_weight, double scale) {
  const double z = scale * cos_sim;
  const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  ScalarLoss out;
  if (same_object) {
    const double log_p = -softplus(-z);
    const bool clamped = log_p < kLogClamp;
    out.loss = -positive_weight * (clamped ? kLogClamp : log_p);
    out.grad = clamped ? 0.0 : -positive_weight * (1.0 - p) * scale;
  } else {
    const double log_q = -softplus(z);
    const bool clamped = log_q < kLogClamp;
    out.loss = -(clamped ? kLogClamp : log_q);
    out.grad = clamped ? 0.0 : p * scale;
  }
  return out;
}

PairLoss object_pair_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool same_object,
                          double positive_weight, double scale) {
  const Cosine c = cosine_with_grad(a, b);
  const ScalarLoss l = object_loss(c.value, same_object, positive_weight, scale);
  return {l.loss, l.grad * c.grad_a, l.grad * c.grad_b};
}

namespace {

Eigen::LLT<Eigen::MatrixXd> coding_factor(const Eigen::MatrixXd& z, double eps, double& alpha) {
  if (z.rows() == 0 || z.cols() == 0) throw ValidationError("coding rate of an empty matrix");
  if (!z.allFinite()) throw ValidationError("coding rate input has non-finite entries");
  if (!(eps > 0)) throw ValidationError("coding rate eps must be positive");
  const auto n = static_cast<double>(z.rows());
  const auto d = static_cast<double>(z.cols());
  alpha = d / (n * eps * eps);
  Eigen::MatrixXd m = alpha * (z.transpose() * z);
  m.diagonal().array() += 1.0;
  return Eigen::LLT<Eigen::MatrixXd>(m);
}

}  // namespace

double coding_rate(const Eigen::MatrixXd& z, double eps) {
  double alpha = 0;
  const auto llt = coding_factor(z, eps, alpha);
  // logdet = 2 * sum(log diag L), so the rate is the plain sum.
  return llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd coding_rate_gradient(const Eigen::MatrixXd& z, double eps) {
  double alpha = 0;
  const auto llt = coding_factor(z, eps, alpha);
  // d/dZ 0.5 logdet(I + a Z^T Z) = a Z (I + a Z^T Z)^{-1}
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(z.cols(), z.cols()));
  return alpha * z * inv;
}

double grad_check(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& analytic,
                  const Eigen::VectorXd& x, double h) {
  double worst = 0;
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd) / (std::abs(analytic[i]) + 1e-8));
  }
  return worst;
}

void ProbeConfig::check() const {
  if (in_dim == 0 || out_dim == 0) throw ValidationError("probe in_dim and out_dim must be positive");
  if (!(learning_rate > 0)) throw ValidationError("probe learning_rate must be positive");
  if (!(weight_decay >= 0)) throw ValidationError("probe weight_decay must be non-negative");
  if (scenes_per_batch == 0 || frames_per_scene == 0) throw ValidationError("probe batch sizes must be positive");
  if (!(positive_weight > 0) || !(bce_scale > 0)) throw ValidationError("probe positive_weight and bce_scale must be positive");
  if (!(place_loss_weight >= 0) || !(object_loss_weight >= 0)) throw ValidationError("probe loss weights must be non-negative");
  if (max_pairs_per_step < 2) throw ValidationError("probe max_pairs_per_step must be at least 2");
  if (!(coding_rate_eps > 0)) throw ValidationError("probe coding_rate_eps must be positive");
}

Projector init_projector(std::size_t in_dim, std::size_t out_dim, double init_noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Projector p;
  p.weights = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
  for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.weights.cols(); ++c) p.weights(r, c) += init_noise * normal(rng);
  }
  p.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out_dim));
  return p;
}

namespace {

struct AdamState {
  Eigen::MatrixXd m_w, v_w;
  Eigen::VectorXd m_b, v_b;
  std::size_t step = 0;

  explicit AdamState(const Projector& p)
      : m_w(Eigen::MatrixXd::Zero(p.weights.rows(), p.weights.cols())),
        v_w(m_w),
        m_b(Eigen::VectorXd::Zero(p.bias.size())),
        v_b(m_b) {}
};

void adamw_step(Projector& p, AdamState& s, const Eigen::MatrixXd& g_w, const Eigen::VectorXd& g_b,
                const ProbeConfig& cfg) {
  ++s.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
  s.m_w = b1 * s.m_w + (1.0 - b1) * g_w;
  s.v_w = b2 * s.v_w + (1.0 - b2) * g_w.cwiseAbs2();
  s.m_b = b1 * s.m_b + (1.0 - b1) * g_b;
  s.v_b = b2 * s.v_b + (1.0 - b2) * g_b.cwiseAbs2();

  // Decoupled decay applies to the weights only.
  p.weights *= 1.0 - cfg.learning_rate * cfg.weight_decay;
  p.weights.array() -= cfg.learning_rate * (s.m_w.array() / c1) / ((s.v_w.array() / c2).sqrt() + cfg.adam_eps);
  p.bias.array() -= cfg.learning_rate * (s.m_b.array() / c1) / ((s.v_b.array() / c2).sqrt() + cfg.adam_eps);
}

struct Item {
  std::size_t scene = 0;
  std::size_t frame = 0;
  std::optional<ObjectId> label;
  const Eigen::VectorXd* embedding = nullptr;
};

struct LabeledPair {
  std::size_t a = 0;
  std::size_t b = 0;
  bool positive = false;
};

/// Pairs of a batch of `n` items. `positives` lists every positive pair and
/// `allowed(a, b)` says whether a pair may be used at all. Within budget every
/// allowed pair is kept; otherwise positives may use up to half the budget
/// and uniformly sampled negatives fill the rest.
template <typename Allowed>
std::vector<LabeledPair> batch_pairs(std::size_t n, std::vector<LabeledPair> positives, std::size_t allowed_total,
                                     Allowed&& allowed, std::size_t budget, std::mt19937_64& rng) {
  std::unordered_set<std::uint64_t> pos_keys;
  for (const auto& p : positives) pos_keys.insert((std::uint64_t{p.a} << 32) | p.b);
  std::vector<LabeledPair> out;

  if (allowed_total <= budget) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (allowed(a, b)) out.push_back({a, b, pos_keys.contains((std::uint64_t{a} << 32) | b)});
      }
    }
    return out;
  }

  const std::size_t negatives = allowed_total - positives.size();
  std::shuffle(positives.begin(), positives.end(), rng);
  const std::size_t keep_pos =
      std::min(positives.size(), std::max<std::size_t>(budget / 2, budget - std::min(budget, negatives)));
  positives.resize(keep_pos);
  out = std::move(positives);

  const std::size_t want_neg = std::min(negatives, budget - keep_pos);
  std::unordered_set<std::uint64_t> taken;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  // Rejection sampling; the attempt cap only matters for degenerate batches.
  for (std::size_t attempts = 0; taken.size() < want_neg && attempts < 64 * budget; ++attempts) {
    std::size_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const std::uint64_t key = (std::uint64_t{a} << 32) | b;
    if (pos_keys.contains(key) || !allowed(a, b) || !taken.insert(key).second) continue;
    out.push_back({a, b, false});
  }
  std::sort(out.begin(), out.end(), [](const LabeledPair& x, const LabeledPair& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  return out;
}

/// Mean pair loss over `pairs` and the accumulated head gradient.
template <typename LossFn>
double head_pass(const Projector& head, const std::vector<Item>& items, const std::vector<LabeledPair>& pairs,
                 LossFn&& loss_fn, double weight, Eigen::MatrixXd& g_w, Eigen::VectorXd& g_b,
                 Eigen::MatrixXd* projected_out = nullptr) {
  g_w.setZero(head.weights.rows(), head.weights.cols());
  g_b.setZero(head.bias.size());
  if (pairs.empty()) return 0.0;

  std::vector<Eigen::VectorXd> z(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) z[i] = head.apply(*items[i].embedding);
  std::vector<Eigen::VectorXd> dz(items.size(), Eigen::VectorXd::Zero(head.bias.size()));

  double total = 0;
  for (const auto& p : pairs) {
    const PairLoss l = loss_fn(z[p.a], z[p.b], p.positive);
    total += l.loss;
    dz[p.a] += l.grad_a;
    dz[p.b] += l.grad_b;
  }
  const double scale = weight / static_cast<double>(pairs.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (dz[i].isZero(0.0)) continue;
    g_w.noalias() += scale * dz[i] * items[i].embedding->transpose();
    g_b += scale * dz[i];
  }
  if (projected_out) {
    projected_out->resize(static_cast<Eigen::Index>(items.size()), head.bias.size());
    for (std::size_t i = 0; i < items.size(); ++i) projected_out->row(static_cast<Eigen::Index>(i)) = z[i].transpose();
  }
  return total / static_cast<double>(pairs.size());
}

std::size_t allowed_pair_count(const std::vector<Item>& items, bool cross_scene) {
  const std::size_t n = items.size();
  if (cross_scene) return n * (n - 1) / 2;
  std::unordered_map<std::size_t, std::size_t> per_scene;
  for (const auto& it : items) ++per_scene[it.scene];
  std::size_t total = 0;
  for (const auto& [scene, c] : per_scene) total += c * (c - 1) / 2;
  return total;
}

std::vector<LabeledPair> make_place_pairs(const std::vector<Item>& places,
                                          const std::vector<std::unordered_set<std::uint64_t>>& same_place,
                                          const ProbeConfig& cfg, std::mt19937_64& rng) {
  std::vector<LabeledPair> positives;
  for (std::size_t a = 0; a < places.size(); ++a) {
    for (std::size_t b = a + 1; b < places.size() && places[b].scene == places[a].scene; ++b) {
      const std::uint64_t key = (std::uint64_t{places[a].frame} << 32) | places[b].frame;
      if (same_place[places[a].scene].contains(key)) positives.push_back({a, b, true});
    }
  }
  auto allowed = [&](std::size_t a, std::size_t b) {
    return cfg.cross_scene_negatives || places[a].scene == places[b].scene;
  };
  return batch_pairs(places.size(), std::move(positives), allowed_pair_count(places, cfg.cross_scene_negatives),
                     allowed, cfg.max_pairs_per_step, rng);
}

std::vector<LabeledPair> make_object_pairs(const std::vector<Item>& objects, const ProbeConfig& cfg,
                                           std::mt19937_64& rng) {
  // Group by (scene, label); positives are the pairs within a group.
  std::map<std::pair<std::size_t, ObjectId>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].label) groups[{objects[i].scene, *objects[i].label}].push_back(i);
  }
  std::vector<LabeledPair> positives;
  for (const auto& [key, members] : groups) {
    for (std::size_t x = 0; x < members.size(); ++x) {
      for (std::size_t y = x + 1; y < members.size(); ++y) positives.push_back({members[x], members[y], true});
    }
  }
  std::sort(positives.begin(), positives.end(), [](const LabeledPair& x, const LabeledPair& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  auto allowed = [&](std::size_t a, std::size_t b) {
    return cfg.cross_scene_negatives || objects[a].scene == objects[b].scene;
  };
  return batch_pairs(objects.size(), std::move(positives), allowed_pair_count(objects, cfg.cross_scene_negatives),
                     allowed, cfg.max_pairs_per_step, rng);
}

}  // namespace

TrainedProbe train_probe(std::span<const ProbeScene> scenes, const ProbeConfig& cfg) {
  cfg.check();
  if (scenes.empty()) throw ValidationError("train_probe: no scenes");
  if (scenes.size() < 2) throw ValidationError("train_probe: at least two scenes are required to mix batches");

  std::vector<std::unordered_set<std::uint64_t>> same_place(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto& sc = scenes[s];
    sc.emb.check();
    if (sc.emb.dim != cfg.in_dim) throw ValidationError("train_probe: embedding dim differs from in_dim");
    if (sc.gt.num_places() != sc.emb.frames.size()) throw ValidationError("train_probe: gt graph / embedding frame mismatch");
    if (sc.object_labels.size() != sc.emb.frames.size()) throw ValidationError("train_probe: label / embedding frame mismatch");
    for (std::size_t t = 0; t < sc.emb.frames.size(); ++t) {
      if (sc.object_labels[t].size() != sc.emb.frames[t].objects.size()) {
        throw ValidationError("train_probe: label / detection count mismatch in frame " + std::to_string(t));
      }
    }
    for (const auto& [i, j] : sc.gt.pp_edges()) same_place[s].insert((std::uint64_t{i} << 32) | j);
  }

  TrainedProbe out;
  out.place_head = init_projector(cfg.in_dim, cfg.out_dim, cfg.init_noise, cfg.seed);
  out.object_head = init_projector(cfg.in_dim, cfg.out_dim, cfg.init_noise, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState place_state(out.place_head), object_state(out.object_head);
  std::mt19937_64 rng(cfg.seed);

  auto place_fn = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool same) { return place_loss(a, b, same); };
  auto object_fn = [&cfg](const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool same) {
    return object_pair_loss(a, b, same, cfg.positive_weight, cfg.bce_scale);
  };

  std::vector<std::size_t> order(scenes.size());
  Eigen::MatrixXd g_w;
  Eigen::VectorXd g_b;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    std::size_t steps = 0;
    Eigen::MatrixXd last_projected;

    for (std::size_t start = 0; start < order.size(); start += cfg.scenes_per_batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.scenes_per_batch);
      std::vector<Item> places, objects;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t s = order[k];
        const auto& emb = scenes[s].emb;
        std::vector<std::size_t> frames(emb.frames.size());
        std::iota(frames.begin(), frames.end(), 0);
        if (frames.size() > cfg.frames_per_scene) {
          std::shuffle(frames.begin(), frames.end(), rng);
          frames.resize(cfg.frames_per_scene);
          std::sort(frames.begin(), frames.end());
        }
        for (const std::size_t t : frames) {
          places.push_back({s, t, std::nullopt, &emb.frames[t].place});
          for (std::size_t d = 0; d < emb.frames[t].objects.size(); ++d) {
            objects.push_back({s, t, scenes[s].object_labels[t][d], &emb.frames[t].objects[d]});
          }
        }
      }

      const std::vector<LabeledPair> place_pairs = make_place_pairs(places, same_place, cfg, rng);
      const std::vector<LabeledPair> object_pairs = make_object_pairs(objects, cfg, rng);
      if (place_pairs.empty() && object_pairs.empty()) continue;

      double step_loss = 0;
      if (!place_pairs.empty() && cfg.place_loss_weight > 0) {
        step_loss += cfg.place_loss_weight *
                     head_pass(out.place_head, places, place_pairs, place_fn, cfg.place_loss_weight, g_w, g_b);
        adamw_step(out.place_head, place_state, g_w, g_b, cfg);
      }
      if (!object_pairs.empty() && cfg.object_loss_weight > 0) {
        step_loss += cfg.object_loss_weight * head_pass(out.object_head, objects, object_pairs, object_fn,
                                                        cfg.object_loss_weight, g_w, g_b, &last_projected);
        adamw_step(out.object_head, object_state, g_w, g_b, cfg);
      }
      epoch_loss += step_loss;
      ++steps;
    }
    out.epoch_loss.push_back(steps ? epoch_loss / static_cast<double>(steps) : 0.0);
    out.epoch_coding_rate.push_back(last_projected.size() ? coding_rate(last_projected, cfg.coding_rate_eps) : 0.0);
  }
  return out;
}

EmbeddingSet apply_probe(const EmbeddingSet& emb, const Projector& place_head, const Projector& object_head) {
  EmbeddingSet out;
  out.dim = static_cast<std::size_t>(place_head.bias.size());
  if (object_head.bias.size() != place_head.bias.size()) throw ValidationError("probe heads have different output dims");
  out.frames.reserve(emb.frames.size());
  for (const auto& f : emb.frames) {
    FrameEmbedding g;
    g.frame_id = f.frame_id;
    g.place = place_head.apply(f.place);
    for (const auto& o : f.objects) g.objects.push_back(object_head.apply(o));
    out.frames.push_back(std::move(g));
  }
  return out;
}

}  // namespace msg
