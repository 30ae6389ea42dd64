#include <random>
#include <set>

#include <gtest/gtest.h>

#include "msg/assignment.hpp"
#include "msg/errors.hpp"
#include "support.hpp"

using namespace msg;

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (const double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

void expect_valid(const Assignment& a, const Eigen::MatrixXd& cost) {
  const auto want = static_cast<std::size_t>(std::min(cost.rows(), cost.cols()));
  ASSERT_EQ(a.pairs.size(), want);
  std::set<std::size_t> rows, cols;
  double total = 0;
  for (const auto& [r, c] : a.pairs) {
    EXPECT_TRUE(rows.insert(r).second);
    EXPECT_TRUE(cols.insert(c).second);
    total += cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  EXPECT_EQ(total, a.total_cost);
}

}  // namespace

TEST(Assignment, TwoByTwo) {
  const auto cost = mat({{0.1, 0.9}, {0.9, 0.1}});
  const auto a = solve_assignment(cost);
  EXPECT_EQ(a.pairs, (Pairs{{0, 0}, {1, 1}}));
  EXPECT_DOUBLE_EQ(a.total_cost, 0.2);
}

TEST(Assignment, IdentityLikeFourByFour) {
  const Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4);
  const auto a = solve_assignment(cost);
  EXPECT_EQ(a.pairs, (Pairs{{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
  EXPECT_EQ(a.total_cost, 0.0);
}

TEST(Assignment, WideRectangle) {
  const auto a = solve_assignment(mat({{5, 1, 9}, {1, 5, 9}}));
  EXPECT_EQ(a.pairs, (Pairs{{0, 1}, {1, 0}}));
  EXPECT_EQ(a.total_cost, 2.0);
}

TEST(Assignment, TallRectangle) {
  const auto a = solve_assignment(mat({{5, 1}, {1, 5}, {0, 0}}));
  expect_valid(a, mat({{5, 1}, {1, 5}, {0, 0}}));
  EXPECT_EQ(a.total_cost, 1.0);
}

TEST(Assignment, EmptyMatrix) {
  EXPECT_TRUE(solve_assignment(Eigen::MatrixXd(0, 0)).pairs.empty());
  EXPECT_TRUE(solve_assignment(Eigen::MatrixXd(0, 3)).pairs.empty());
  EXPECT_TRUE(solve_assignment(Eigen::MatrixXd(2, 0)).pairs.empty());
}

TEST(Assignment, RejectsNonFinite) {
  auto cost = mat({{1, 2}, {3, 4}});
  cost(1, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(solve_assignment(cost), ValidationError);
  cost(1, 0) = std::nan("");
  EXPECT_THROW(solve_assignment(cost), ValidationError);
}

TEST(Assignment, NegativeCosts) {
  const auto cost = mat({{-3, -1}, {-2, -8}});
  const auto a = solve_assignment(cost);
  EXPECT_EQ(a.total_cost, -11.0);
}

TEST(Assignment, TiesPreferLowIndices) {
  const Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_EQ(solve_assignment(cost).pairs, (Pairs{{0, 0}, {1, 1}, {2, 2}}));
  EXPECT_EQ(solve_assignment(cost).pairs, solve_assignment(cost).pairs);
}

TEST(AssignmentProperty, MatchesBruteForceOnSquareInstances) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> small(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + trial % 7);
    Eigen::MatrixXd cost(n, n);
    // Integer costs produce many ties, real ones none.
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost(i) = trial % 2 ? u(rng) : small(rng);
    const auto a = solve_assignment(cost);
    expect_valid(a, cost);
    EXPECT_NEAR(a.total_cost, test::brute_force_min_cost(cost), 1e-9);
  }
}

TEST(AssignmentProperty, MatchesBruteForceOnRectangles) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = static_cast<Eigen::Index>(1 + rng() % 6);
    const auto c = static_cast<Eigen::Index>(1 + rng() % 7);
    Eigen::MatrixXd cost(r, c);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost(i) = u(rng);
    const auto a = solve_assignment(cost);
    expect_valid(a, cost);
    EXPECT_NEAR(a.total_cost, test::brute_force_min_cost(cost), 1e-12);
  }
}
