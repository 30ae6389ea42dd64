#pragma once

#include <optional>
#include <string>

#include "msg/graph.hpp"
#include "msg/metrics.hpp"

namespace msg {

enum class MatchSide { gt, pred };

/// Graphviz DOT text: places as boxes, objects as ellipses, place-place edges
/// solid and place-object edges dashed. With a matching, objects on `side` are
/// colored green when matched and red otherwise. Output depends only on the
/// inputs (nodes and edges in id order).
std::string to_dot(const MSGraph& graph, const std::optional<ObjectMatching>& matching = std::nullopt,
                   MatchSide side = MatchSide::pred);

}  // namespace msg
