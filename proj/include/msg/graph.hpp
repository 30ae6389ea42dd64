#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace msg {

using PlaceId = std::uint32_t;
using ObjectId = std::uint32_t;

struct ObjectNode {
  ObjectId id = 0;
  std::optional<std::string> label;

  bool operator==(const ObjectNode&) const = default;
};

using PlaceEdge = std::pair<PlaceId, PlaceId>;    // canonical: first < second
using PlaceObjectEdge = std::pair<PlaceId, ObjectId>;

/// Unvalidated graph contents, as parsed from a file or assembled by a builder.
struct GraphData {
  std::size_t num_places = 0;
  std::vector<ObjectNode> objects;
  std::vector<PlaceEdge> pp_edges;
  std::vector<PlaceObjectEdge> po_edges;
};

/// Row-major dense 0/1 matrix.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::uint8_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::size_t count_ones() const;

  bool operator==(const BinaryMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> data_;
};

/// The two stored blocks of the place+object adjacency matrix. The
/// object-object block is always empty and the object-place block is the
/// transpose of `apo`, so neither is kept.
struct AdjacencyBlocks {
  BinaryMatrix app;  // |P| x |P|, symmetric, zero diagonal
  BinaryMatrix apo;  // |P| x |O|, column k is the object at ordinal k

  bool operator==(const AdjacencyBlocks&) const = default;
};

struct Violation {
  std::string message;
};

/// Lists every invariant violation in `data`; empty iff the data forms a valid graph.
std::vector<Violation> validate(const GraphData& data);

/// Immutable multiview scene graph: one place node per image, one object node
/// per physical object, plus place-place and place-object edge sets.
///
/// Edge lists are kept sorted, so two graphs with the same edge sets compare
/// equal regardless of the order edges were supplied in.
class MSGraph {
 public:
  MSGraph() = default;

  /// Throws ValidationError listing all violations if `data` is invalid.
  static MSGraph create(GraphData data);

  std::size_t num_places() const { return data_.num_places; }
  std::size_t num_objects() const { return data_.objects.size(); }
  const std::vector<ObjectNode>& objects() const { return data_.objects; }
  const std::vector<PlaceEdge>& pp_edges() const { return data_.pp_edges; }
  const std::vector<PlaceObjectEdge>& po_edges() const { return data_.po_edges; }
  const GraphData& data() const { return data_; }

  /// Ordinal (column in `apo`) of the object with `id`, if present.
  std::optional<std::size_t> object_ordinal(ObjectId id) const;

  bool operator==(const MSGraph& other) const;

 private:
  explicit MSGraph(GraphData data) : data_(std::move(data)) {}

  GraphData data_;
};

std::vector<Violation> validate(const MSGraph& graph);

AdjacencyBlocks to_adjacency(const MSGraph& graph);

/// Inverse of to_adjacency. Objects get ids 0..|O|-1 in column order; labels,
/// when given, must have one entry per column.
MSGraph from_adjacency(const AdjacencyBlocks& blocks,
                       const std::optional<std::vector<std::optional<std::string>>>& labels = std::nullopt);

}  // namespace msg
