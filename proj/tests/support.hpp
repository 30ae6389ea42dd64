// Shared helpers and brute-force oracles for the test binaries.
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "msg/geometry.hpp"
#include "msg/graph.hpp"
#include "msg/metrics.hpp"
#include "msg/scene.hpp"

namespace msg::test {

inline MSGraph make_graph(std::size_t places, std::vector<ObjectId> objects, std::vector<PlaceEdge> pp,
                          std::vector<PlaceObjectEdge> po) {
  GraphData d;
  d.num_places = places;
  for (const ObjectId id : objects) d.objects.push_back({id, std::nullopt});
  d.pp_edges = std::move(pp);
  d.po_edges = std::move(po);
  return MSGraph::create(std::move(d));
}

inline Pose pose_at(double x, double y, double z, double yaw = 0.0) {
  return Pose::make(Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ())), Eigen::Vector3d(x, y, z));
}

inline Frame frame(PlaceId id, const Pose& pose, std::vector<Detection> dets = {}) {
  Frame f;
  f.frame_id = id;
  f.pose = pose;
  f.detections = std::move(dets);
  return f;
}

inline Detection det(std::optional<ObjectId> id, Box2 box) { return Detection{id, box, std::nullopt}; }

/// Minimum over all injections of the smaller side into the larger one.
inline double brute_force_min_cost(const Eigen::MatrixXd& cost) {
  const bool transpose = cost.rows() > cost.cols();
  const Eigen::MatrixXd c = transpose ? Eigen::MatrixXd(cost.transpose()) : cost;
  const auto rows = static_cast<std::size_t>(c.rows());
  const auto cols = static_cast<std::size_t>(c.cols());
  if (rows == 0) return 0.0;
  std::vector<std::size_t> perm(cols);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  // Every permutation's prefix of length `rows` is an injection; all injections appear.
  do {
    double total = 0;
    for (std::size_t r = 0; r < rows; ++r) total += c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(perm[r]));
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Injection of rows into columns (or columns into rows) maximizing the summed
/// score, as (row, col) pairs. Exhaustive.
inline std::vector<std::pair<std::size_t, std::size_t>> brute_force_max_injection(const Eigen::MatrixXd& score,
                                                                                   double* best_out = nullptr) {
  const bool transpose = score.rows() > score.cols();
  const Eigen::MatrixXd s = transpose ? Eigen::MatrixXd(score.transpose()) : score;
  const auto rows = static_cast<std::size_t>(s.rows());
  const auto cols = static_cast<std::size_t>(s.cols());
  std::vector<std::size_t> perm(cols), best_perm;
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (std::size_t r = 0; r < rows; ++r) total += s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(perm[r]));
    if (total > best) {
      best = total;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 0; r < rows; ++r) {
    out.push_back(transpose ? std::pair(best_perm[r], r) : std::pair(r, best_perm[r]));
  }
  std::sort(out.begin(), out.end());
  if (best_out) *best_out = rows ? best : 0.0;
  return out;
}

using IntMatrix = std::vector<std::vector<int>>;

/// Block IoU of two 0/1 matrices written out entry by entry: the overlap
/// region is the leading min(rows) x min(cols) block, and every 1-entry of
/// either matrix outside it enters the denominator.
inline double matrix_iou_oracle(const IntMatrix& a, std::size_t a_cols, const IntMatrix& b, std::size_t b_cols) {
  const std::size_t ms = std::min(a.size(), b.size());
  const std::size_t ns = std::min(a_cols, b_cols);
  long inter = 0, uni = 0, wa = 0, wb = 0;
  for (std::size_t i = 0; i < ms; ++i) {
    for (std::size_t j = 0; j < ns; ++j) {
      inter += a[i][j] & b[i][j];
      uni += a[i][j] | b[i][j];
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a_cols; ++j) {
      if (i >= ms || j >= ns) wa += a[i][j];
    }
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = 0; j < b_cols; ++j) {
      if (i >= ms || j >= ns) wb += b[i][j];
    }
  }
  const long denom = uni + wa + wb;
  return denom == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(denom);
}

inline BinaryMatrix to_binary(const IntMatrix& m, std::size_t cols) {
  BinaryMatrix out(m.size(), cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = static_cast<std::uint8_t>(m[i][j]);
  }
  return out;
}

inline Box2 random_box(std::mt19937_64& rng, double w = 256, double h = 192) {
  std::uniform_real_distribution<double> ux(0, w - 20), uy(0, h - 20), us(5, 80);
  const double x = ux(rng), y = uy(rng);
  return {x, y, std::min(w, x + us(rng)), std::min(h, y + us(rng))};
}

inline Box2 jitter_box(const Box2& b, double px, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-px, px);
  Box2 out{b.x1 + u(rng), b.y1 + u(rng), b.x2 + u(rng), b.y2 + u(rng)};
  if (out.x2 <= out.x1) out.x2 = out.x1 + 1;
  if (out.y2 <= out.y1) out.y2 = out.y1 + 1;
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("msgkit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace msg::test
