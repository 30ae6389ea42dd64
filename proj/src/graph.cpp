#include "msg/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "msg/errors.hpp"

namespace msg {

namespace {

std::string edge_str(std::uint64_t a, std::uint64_t b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

}  // namespace

std::size_t BinaryMatrix::count_ones() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::vector<Violation> validate(const GraphData& data) {
  std::vector<Violation> out;

  std::unordered_set<ObjectId> ids;
  for (const auto& obj : data.objects) {
    if (!ids.insert(obj.id).second) {
      out.push_back({"duplicate object id " + std::to_string(obj.id)});
    }
  }

  std::set<PlaceEdge> seen_pp;
  for (const auto& [i, j] : data.pp_edges) {
    const auto e = edge_str(i, j);
    if (i >= data.num_places || j >= data.num_places) {
      out.push_back({"pp edge " + e + " references unknown place"});
    } else if (i == j) {
      out.push_back({"pp edge " + e + " is a self-edge"});
    } else if (i > j) {
      out.push_back({"pp edge " + e + " is not canonical (expected i < j)"});
    } else if (!seen_pp.insert({i, j}).second) {
      out.push_back({"duplicate pp edge " + e});
    }
  }

  std::set<PlaceObjectEdge> seen_po;
  for (const auto& [p, o] : data.po_edges) {
    const auto e = edge_str(p, o);
    if (p >= data.num_places) {
      out.push_back({"po edge " + e + " references unknown place"});
    } else if (!ids.contains(o)) {
      out.push_back({"po edge " + e + " references unknown object"});
    } else if (!seen_po.insert({p, o}).second) {
      out.push_back({"duplicate po edge " + e});
    }
  }
  return out;
}

std::vector<Violation> validate(const MSGraph& graph) { return validate(graph.data()); }

MSGraph MSGraph::create(GraphData data) {
  const auto violations = validate(data);
  if (!violations.empty()) {
    std::string msg = "invalid graph:";
    for (const auto& v : violations) msg += " " + v.message + ";";
    throw ValidationError(msg);
  }
  std::sort(data.pp_edges.begin(), data.pp_edges.end());
  std::sort(data.po_edges.begin(), data.po_edges.end());
  return MSGraph(std::move(data));
}

std::optional<std::size_t> MSGraph::object_ordinal(ObjectId id) const {
  for (std::size_t k = 0; k < data_.objects.size(); ++k) {
    if (data_.objects[k].id == id) return k;
  }
  return std::nullopt;
}

bool MSGraph::operator==(const MSGraph& other) const {
  return data_.num_places == other.data_.num_places && data_.objects == other.data_.objects &&
         data_.pp_edges == other.data_.pp_edges && data_.po_edges == other.data_.po_edges;
}

AdjacencyBlocks to_adjacency(const MSGraph& graph) {
  const std::size_t n = graph.num_places();
  AdjacencyBlocks blocks{BinaryMatrix(n, n), BinaryMatrix(n, graph.num_objects())};
  for (const auto& [i, j] : graph.pp_edges()) {
    blocks.app(i, j) = 1;
    blocks.app(j, i) = 1;
  }
  std::unordered_map<ObjectId, std::size_t> column;
  for (std::size_t k = 0; k < graph.num_objects(); ++k) column[graph.objects()[k].id] = k;
  for (const auto& [p, o] : graph.po_edges()) blocks.apo(p, column.at(o)) = 1;
  return blocks;
}

MSGraph from_adjacency(const AdjacencyBlocks& blocks,
                       const std::optional<std::vector<std::optional<std::string>>>& labels) {
  const auto& app = blocks.app;
  const auto& apo = blocks.apo;
  if (app.rows() != app.cols()) throw ValidationError("app must be square");
  if (apo.rows() != app.rows()) throw ValidationError("apo row count must equal place count");
  if (labels && labels->size() != apo.cols()) throw ValidationError("one label per object column required");

  GraphData data;
  data.num_places = app.rows();
  for (std::size_t i = 0; i < app.rows(); ++i) {
    if (app(i, i) != 0) throw ValidationError("self-edge at place " + std::to_string(i));
    for (std::size_t j = i + 1; j < app.cols(); ++j) {
      if (app(i, j) > 1 || app(j, i) > 1) throw ValidationError("non-binary entry in app");
      if (app(i, j) != app(j, i)) throw ValidationError("asymmetric app at " + edge_str(i, j));
      if (app(i, j)) data.pp_edges.emplace_back(static_cast<PlaceId>(i), static_cast<PlaceId>(j));
    }
  }
  for (std::size_t k = 0; k < apo.cols(); ++k) {
    data.objects.push_back({static_cast<ObjectId>(k), labels ? (*labels)[k] : std::nullopt});
  }
  for (std::size_t i = 0; i < apo.rows(); ++i) {
    for (std::size_t k = 0; k < apo.cols(); ++k) {
      if (apo(i, k) > 1) throw ValidationError("non-binary entry in apo");
      if (apo(i, k)) data.po_edges.emplace_back(static_cast<PlaceId>(i), static_cast<ObjectId>(k));
    }
  }
  return MSGraph::create(std::move(data));
}

}  // namespace msg
