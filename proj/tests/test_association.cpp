#include <random>
#include <set>

#include <gtest/gtest.h>

#include "msg/association.hpp"
#include "msg/errors.hpp"
#include "msg/simulator.hpp"
#include "support.hpp"

using namespace msg;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out[i++] = x;
  return out;
}

Eigen::VectorXd unit(std::size_t dim, std::size_t axis) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  e[static_cast<Eigen::Index>(axis)] = 1;
  return e;
}

/// Two-dimensional vector at `cos` to the x axis.
Eigen::VectorXd at_cosine(double cos) { return vec({cos, std::sqrt(1 - cos * cos)}); }

EmbeddingSet places_only(std::vector<Eigen::VectorXd> places) {
  EmbeddingSet e;
  e.dim = static_cast<std::size_t>(places.front().size());
  for (std::size_t t = 0; t < places.size(); ++t) e.frames.push_back({static_cast<PlaceId>(t), places[t], {}});
  return e;
}

EmbeddingSet objects_only(std::size_t dim, std::vector<std::vector<Eigen::VectorXd>> objects) {
  EmbeddingSet e;
  e.dim = dim;
  for (std::size_t t = 0; t < objects.size(); ++t) {
    e.frames.push_back({static_cast<PlaceId>(t), unit(dim, 0), objects[t]});
  }
  return e;
}

}  // namespace

TEST(PlaceSimilarity, Examples) {
  const auto same = place_similarity(places_only({vec({1, 2}), vec({1, 2}), vec({2, 4})}));
  EXPECT_TRUE(same.isApprox(Eigen::MatrixXd::Ones(3, 3), 1e-15));

  const auto orth = place_similarity(places_only({vec({1, 0}), vec({0, 3})}));
  EXPECT_EQ(orth(0, 1), 0.0);
  EXPECT_EQ(orth(1, 1), 1.0);

  const auto anti = place_similarity(places_only({vec({1, 1}), vec({-2, -2})}));
  EXPECT_NEAR(anti(0, 1), -1.0, 1e-15);
}

TEST(PredictPp, ThresholdMembership) {
  const auto emb = places_only({at_cosine(1.0), at_cosine(0.31), at_cosine(0.29)});
  const auto p = predict_pp(emb, AssocConfig{});
  // cos(0,1) = 0.31, cos(0,2) = 0.29; frames 1 and 2 are nearly parallel.
  EXPECT_EQ(p.edges, (std::vector<PlaceEdge>{{0, 1}, {1, 2}}));
}

TEST(PredictPp, ExtremeThresholds) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<Eigen::VectorXd> v;
  for (int i = 0; i < 6; ++i) v.push_back(Eigen::VectorXd::NullaryExpr(4, [&] { return n(rng); }));
  v.push_back(v[2]);
  const auto emb = places_only(v);
  AssocConfig loose;
  loose.tau_place = -1 + 1e-9;
  EXPECT_EQ(predict_pp(emb, loose).edges.size(), 7u * 6u / 2u);
  AssocConfig strict;
  strict.tau_place = 1.0;
  EXPECT_EQ(predict_pp(emb, strict).edges, (std::vector<PlaceEdge>{{2, 6}}));
}

TEST(AssocConfig, RejectsOutOfRangeThresholds) {
  AssocConfig c;
  c.tau_place = -1.0;
  EXPECT_THROW(c.check(), ValidationError);
  c.tau_place = 0.3;
  c.tau_object = 1.5;
  EXPECT_THROW(c.check(), ValidationError);
}

TEST(AssociateObjects, SameEmbeddingOneId) {
  const auto e = unit(4, 1);
  const auto r = associate_objects(objects_only(4, {{e}, {e}, {e}, {e}, {e}}), AssocConfig{});
  for (const auto& f : r.ids) EXPECT_EQ(f, std::vector<ObjectId>{0});
  EXPECT_EQ(r.bank.size(), 1u);
  EXPECT_EQ(r.bank.entries()[0].count, 5u);
}

TEST(AssociateObjects, OrthogonalDetectionsInOneFrame) {
  const auto r = associate_objects(objects_only(4, {{unit(4, 0), unit(4, 1)}}), AssocConfig{});
  EXPECT_EQ(r.ids[0], (std::vector<ObjectId>{0, 1}));
}

TEST(AssociateObjects, ReappearanceAfterFiftyFrames) {
  std::vector<std::vector<Eigen::VectorXd>> frames(52);
  frames[0] = {unit(3, 0)};
  for (std::size_t t = 1; t < 51; ++t) frames[t] = {unit(3, 2)};
  frames[51] = {vec({0.9, std::sqrt(1 - 0.81), 0})};
  const auto r = associate_objects(objects_only(3, frames), AssocConfig{});
  EXPECT_EQ(r.ids[51], std::vector<ObjectId>{0});
  EXPECT_EQ(r.bank.size(), 2u);
}

TEST(AssociateObjects, AssignmentBeatsGreedy) {
  // Detection 0 is closest to prototype 0, but the best total gives it prototype 1.
  const auto p0 = unit(3, 0), p1 = unit(3, 1);
  const Eigen::VectorXd d0 = vec({0.8, 0.6, 0}), d1 = vec({0.7, 0, std::sqrt(1 - 0.49)});
  const auto r = associate_objects(objects_only(3, {{p0, p1}, {d0, d1}}), AssocConfig{});
  EXPECT_EQ(r.ids[1], (std::vector<ObjectId>{1, 0}));
}

TEST(AssociateObjects, RunningMeanAndReplace) {
  const Eigen::VectorXd a = unit(2, 0), b = vec({std::sqrt(0.5), std::sqrt(0.5)});
  const auto emb = objects_only(2, {{a}, {b}});
  AssocConfig cfg;
  const auto mean = associate_objects(emb, cfg);
  EXPECT_TRUE(mean.bank.entries()[0].prototype.isApprox((a + b).normalized(), 1e-12));
  cfg.bank_update = BankUpdate::replace;
  const auto rep = associate_objects(emb, cfg);
  EXPECT_TRUE(rep.bank.entries()[0].prototype.isApprox(b, 1e-12));
}

TEST(BuildPredGraph, NoDetections) {
  const auto emb = places_only({vec({1, 0}), vec({1, 0.1})});
  const auto p = build_pred_graph(emb, AssocConfig{}, {{}, {}});
  EXPECT_EQ(p.graph.num_objects(), 0u);
  EXPECT_EQ(p.graph.pp_edges().size(), 1u);
}

TEST(BuildPredGraph, RejectsMisalignedDetections) {
  const auto emb = objects_only(2, {{unit(2, 0)}});
  EXPECT_THROW(build_pred_graph(emb, AssocConfig{}, {{}}), ValidationError);
}

TEST(EmbeddingSetCheck, RejectsZeroVectorsAndWrongDims) {
  auto e = places_only({vec({1, 0}), vec({0, 1})});
  e.frames[1].place = vec({0, 0});
  EXPECT_THROW(e.check(), ValidationError);
  e.frames[1].place = vec({0, 1, 0});
  EXPECT_THROW(e.check(), ValidationError);
}

TEST(AssociationProperty, InjectiveScaleInvariantMonotoneAndDeterministic) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> scale(0.1, 10);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = 6;
    std::vector<Eigen::VectorXd> latents;
    for (int k = 0; k < 5; ++k) latents.push_back(Eigen::VectorXd::NullaryExpr(dim, [&] { return n(rng); }));
    EmbeddingSet emb;
    emb.dim = dim;
    std::vector<std::vector<Detection>> boxes;
    for (PlaceId t = 0; t < 12; ++t) {
      FrameEmbedding f{t, Eigen::VectorXd::NullaryExpr(dim, [&] { return n(rng); }), {}};
      boxes.emplace_back();
      for (std::size_t k = 0; k < latents.size(); ++k) {
        if (rng() % 2) continue;
        f.objects.push_back(latents[k] + 0.6 * Eigen::VectorXd::NullaryExpr(dim, [&] { return n(rng); }));
        boxes.back().push_back(test::det(std::nullopt, test::random_box(rng)));
      }
      emb.frames.push_back(f);
    }

    const auto base = build_pred_graph(emb, AssocConfig{}, boxes);
    EXPECT_TRUE(validate(base.graph).empty());
    for (const auto& ids : associate_objects(emb, AssocConfig{}).ids) {
      EXPECT_EQ(std::set<ObjectId>(ids.begin(), ids.end()).size(), ids.size());
    }
    EXPECT_EQ(build_pred_graph(emb, AssocConfig{}, boxes).graph, base.graph);

    auto scaled = emb;
    for (auto& f : scaled.frames) {
      f.place *= scale(rng);
      for (auto& o : f.objects) o *= scale(rng);
    }
    EXPECT_EQ(build_pred_graph(scaled, AssocConfig{}, boxes).graph, base.graph);

    AssocConfig higher;
    higher.tau_place = 0.6;
    const auto fewer = predict_pp(emb, higher).edges;
    for (const auto& e : fewer) {
      EXPECT_TRUE(std::binary_search(base.graph.pp_edges().begin(), base.graph.pp_edges().end(), e));
    }
  }
}

TEST(AssociationReplay, BankGrowthMonotoneInObjectThresholdOnFixedScene) {
  // The running-mean bank is path dependent, so growth in tau_object is only
  // pinned on a fixed replay, not claimed for arbitrary inputs.
  SimConfig cfg;
  cfg.seed = 2024;
  cfg.sigma_object = 0.6;
  cfg.detector.spurious_rate = 0.5;
  const auto emb = simulate(cfg).emb;
  std::size_t previous = 0;
  for (const double tau : {-0.5, 0.0, 0.2, 0.4, 0.7, 0.95}) {
    AssocConfig c;
    c.tau_object = tau;
    const std::size_t size = associate_objects(emb, c).bank.size();
    EXPECT_GE(size, previous) << "tau " << tau;
    previous = size;
  }
  EXPECT_GT(previous, 1u);
}
