#include "msg/association.hpp"

#include <algorithm>
#include <string>

#include "msg/assignment.hpp"
#include "msg/errors.hpp"

namespace msg {

namespace {

void check_vector(const Eigen::VectorXd& v, std::size_t dim, const std::string& what) {
  if (static_cast<std::size_t>(v.size()) != dim) {
    throw ValidationError(what + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(dim));
  }
  if (!v.allFinite()) throw ValidationError(what + " has non-finite entries");
  if (v.norm() == 0.0) throw ValidationError(what + " has zero norm");
}

}  // namespace

void EmbeddingSet::check() const {
  if (dim == 0) throw ValidationError("embedding dim must be positive");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    const std::string where = "frame " + std::to_string(t);
    if (f.frame_id != t) throw ValidationError("embedding frame ids must be consecutive from 0 (" + where + ")");
    check_vector(f.place, dim, where + " place embedding");
    for (std::size_t k = 0; k < f.objects.size(); ++k) {
      check_vector(f.objects[k], dim, where + " detection " + std::to_string(k) + " embedding");
    }
  }
}

void AssocConfig::check() const {
  if (!(tau_place > -1.0 && tau_place <= 1.0)) throw ValidationError("tau_place must lie in (-1, 1]");
  if (!(tau_object > -1.0 && tau_object <= 1.0)) throw ValidationError("tau_object must lie in (-1, 1]");
}

ObjectId MemoryBank::register_object(const Eigen::VectorXd& unit_embedding) {
  const auto id = static_cast<ObjectId>(entries_.size());
  entries_.push_back({id, unit_embedding, 1});
  return id;
}

void MemoryBank::update(std::size_t index, const Eigen::VectorXd& unit_embedding, BankUpdate mode) {
  auto& e = entries_.at(index);
  if (mode == BankUpdate::replace) {
    e.prototype = unit_embedding;
  } else {
    const auto n = static_cast<double>(e.count);
    const Eigen::VectorXd mean = (n * e.prototype + unit_embedding) / (n + 1.0);
    // Antipodal averages can cancel exactly; keep the old prototype then.
    if (mean.norm() > 0.0) e.prototype = mean.normalized();
  }
  ++e.count;
}

Eigen::MatrixXd place_similarity(const EmbeddingSet& emb) {
  const auto n = static_cast<Eigen::Index>(emb.frames.size());
  Eigen::MatrixXd unit(static_cast<Eigen::Index>(emb.dim), n);
  for (Eigen::Index i = 0; i < n; ++i) unit.col(i) = emb.frames[static_cast<std::size_t>(i)].place.normalized();
  Eigen::MatrixXd sim = unit.transpose() * unit;
  for (Eigen::Index i = 0; i < n; ++i) {
    sim(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      // Rounding can leave a duplicate a hair below 1.
      sim(i, j) = unit.col(i) == unit.col(j) ? 1.0 : std::clamp(sim(i, j), -1.0, 1.0);
      sim(j, i) = sim(i, j);
    }
  }
  return sim;
}

PlacePrediction predict_pp(const EmbeddingSet& emb, const AssocConfig& cfg) {
  PlacePrediction out;
  out.similarity = place_similarity(emb);
  const auto n = out.similarity.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (out.similarity(i, j) >= cfg.tau_place) out.edges.emplace_back(static_cast<PlaceId>(i), static_cast<PlaceId>(j));
    }
  }
  return out;
}

AssociationResult associate_objects(const EmbeddingSet& emb, const AssocConfig& cfg) {
  AssociationResult out;
  out.ids.reserve(emb.frames.size());
  for (const auto& frame : emb.frames) {
    const std::size_t n_det = frame.objects.size();
    std::vector<Eigen::VectorXd> unit;
    unit.reserve(n_det);
    for (const auto& e : frame.objects) unit.push_back(e.normalized());

    std::vector<ObjectId> ids(n_det);
    std::vector<char> assigned(n_det, 0);
    const std::size_t n_bank = out.bank.size();
    if (n_det > 0 && n_bank > 0) {
      Eigen::MatrixXd sim(static_cast<Eigen::Index>(n_det), static_cast<Eigen::Index>(n_bank));
      for (std::size_t d = 0; d < n_det; ++d) {
        for (std::size_t b = 0; b < n_bank; ++b) {
          sim(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(b)) =
              unit[d].dot(out.bank.entries()[b].prototype);
        }
      }
      const Assignment a = solve_assignment(-sim);
      for (const auto& [d, b] : a.pairs) {
        if (sim(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(b)) < cfg.tau_object) continue;
        ids[d] = out.bank.entries()[b].id;
        assigned[d] = 1;
        out.bank.update(b, unit[d], cfg.bank_update);
      }
    }
    for (std::size_t d = 0; d < n_det; ++d) {
      if (!assigned[d]) ids[d] = out.bank.register_object(unit[d]);
    }
    out.ids.push_back(std::move(ids));
  }
  return out;
}

GraphPrediction build_pred_graph(const EmbeddingSet& emb, const AssocConfig& cfg,
                                 const std::vector<std::vector<Detection>>& frames) {
  if (frames.size() != emb.frames.size()) {
    throw ValidationError("embeddings cover " + std::to_string(emb.frames.size()) + " frames, detections cover " +
                          std::to_string(frames.size()));
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != emb.frames[t].objects.size()) {
      throw ValidationError("frame " + std::to_string(t) + " has " + std::to_string(frames[t].size()) +
                            " detections but " + std::to_string(emb.frames[t].objects.size()) + " embeddings");
    }
  }

  auto places = predict_pp(emb, cfg);
  const auto assoc = associate_objects(emb, cfg);

  GraphData g;
  g.num_places = emb.frames.size();
  g.pp_edges = std::move(places.edges);
  for (const auto& entry : assoc.bank.entries()) g.objects.push_back({entry.id, std::nullopt});

  GraphPrediction out;
  out.detections.resize(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t d = 0; d < frames[t].size(); ++d) {
      const ObjectId id = assoc.ids[t][d];
      g.po_edges.emplace_back(static_cast<PlaceId>(t), id);  // ids are unique within a frame
      out.detections[t].push_back({id, frames[t][d].box, frames[t][d].score});
    }
  }
  out.graph = MSGraph::create(std::move(g));
  out.similarity = std::move(places.similarity);
  return out;
}

}  // namespace msg
