#include <random>

#include <gtest/gtest.h>

#include "msg/errors.hpp"
#include "msg/graph.hpp"
#include "support.hpp"

using namespace msg;
using msg::test::make_graph;

TEST(Adjacency, EmptyGraphHasZeroBlocks) {
  const auto g = make_graph(3, {}, {}, {});
  const auto blocks = to_adjacency(g);
  EXPECT_EQ(blocks.app.rows(), 3u);
  EXPECT_EQ(blocks.app.cols(), 3u);
  EXPECT_EQ(blocks.app.count_ones(), 0u);
  EXPECT_EQ(blocks.apo.rows(), 3u);
  EXPECT_EQ(blocks.apo.cols(), 0u);
}

TEST(Adjacency, PlaceEdgeIsSymmetric) {
  const auto blocks = to_adjacency(make_graph(3, {}, {{0, 1}}, {}));
  EXPECT_EQ(blocks.app(0, 1), 1);
  EXPECT_EQ(blocks.app(1, 0), 1);
  EXPECT_EQ(blocks.app.count_ones(), 2u);
}

TEST(Adjacency, SinglePlaceObjectEdge) {
  const auto blocks = to_adjacency(make_graph(3, {42}, {}, {{2, 42}}));
  ASSERT_EQ(blocks.apo.cols(), 1u);
  EXPECT_EQ(blocks.apo(0, 0), 0);
  EXPECT_EQ(blocks.apo(1, 0), 0);
  EXPECT_EQ(blocks.apo(2, 0), 1);
}

TEST(Adjacency, ColumnsFollowObjectOrder) {
  const auto g = make_graph(2, {9, 3}, {}, {{0, 3}, {1, 9}});
  const auto blocks = to_adjacency(g);
  EXPECT_EQ(blocks.apo(1, 0), 1);  // object 9 is column 0
  EXPECT_EQ(blocks.apo(0, 1), 1);
  EXPECT_EQ(g.object_ordinal(3), 1u);
  EXPECT_FALSE(g.object_ordinal(4).has_value());
}

TEST(Adjacency, RejectsSelfEdge) {
  AdjacencyBlocks b{BinaryMatrix(2, 2), BinaryMatrix(2, 0)};
  b.app(0, 0) = 1;
  try {
    from_adjacency(b);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("self-edge"), std::string::npos);
  }
}

TEST(Adjacency, RejectsAsymmetric) {
  AdjacencyBlocks b{BinaryMatrix(2, 2), BinaryMatrix(2, 0)};
  b.app(0, 1) = 1;
  try {
    from_adjacency(b);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("asymmetric"), std::string::npos);
  }
}

TEST(Validate, AcceptsValidGraph) {
  GraphData d{3, {{0, std::nullopt}, {1, "chair"}}, {{0, 1}, {1, 2}}, {{0, 0}, {2, 1}}};
  EXPECT_TRUE(validate(d).empty());
}

TEST(Validate, UnknownObjectIsOneViolation) {
  GraphData d{2, {{0, std::nullopt}}, {}, {{0, 7}}};
  const auto v = validate(d);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].message.find("7"), std::string::npos);
}

TEST(Validate, DuplicateObjectIdIsOneViolation) {
  GraphData d{2, {{5, std::nullopt}, {5, std::nullopt}}, {}, {}};
  EXPECT_EQ(validate(d).size(), 1u);
}

TEST(Validate, SelfEdgeAndOutOfRangePlace) {
  GraphData d{2, {}, {{1, 1}, {0, 4}}, {}};
  EXPECT_EQ(validate(d).size(), 2u);
  EXPECT_THROW(MSGraph::create(d), ValidationError);
}

TEST(Graph, EdgeOrderDoesNotAffectEquality) {
  const auto a = make_graph(4, {1, 2}, {{0, 1}, {2, 3}}, {{3, 2}, {0, 1}});
  const auto b = make_graph(4, {1, 2}, {{2, 3}, {0, 1}}, {{0, 1}, {3, 2}});
  EXPECT_EQ(a, b);
}

TEST(GraphProperty, RoundTripAndOneCounts) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t places = 1 + rng() % 12;
    const std::size_t objects = rng() % 8;
    std::bernoulli_distribution coin(0.3);
    GraphData d;
    d.num_places = places;
    for (std::size_t k = 0; k < objects; ++k) d.objects.push_back({static_cast<ObjectId>(k), std::nullopt});
    for (PlaceId i = 0; i < places; ++i) {
      for (PlaceId j = i + 1; j < places; ++j) {
        if (coin(rng)) d.pp_edges.emplace_back(i, j);
      }
      for (ObjectId k = 0; k < objects; ++k) {
        if (coin(rng)) d.po_edges.emplace_back(i, k);
      }
    }
    const auto g = MSGraph::create(d);
    const auto blocks = to_adjacency(g);
    EXPECT_EQ(blocks.app.count_ones(), 2 * g.pp_edges().size());
    EXPECT_EQ(blocks.apo.count_ones(), g.po_edges().size());
    EXPECT_EQ(from_adjacency(blocks), g);
    EXPECT_EQ(to_adjacency(from_adjacency(blocks)), blocks);
  }
}
