#include "msg/dot.hpp"

#include <sstream>
#include <unordered_set>

namespace msg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string to_dot(const MSGraph& graph, const std::optional<ObjectMatching>& matching, MatchSide side) {
  std::unordered_set<ObjectId> matched;
  if (matching) {
    for (const auto& p : matching->pairs) matched.insert(side == MatchSide::gt ? p.gt : p.pred);
  }

  std::ostringstream out;
  out << "digraph msg {\n";
  for (std::size_t i = 0; i < graph.num_places(); ++i) {
    out << "  p" << i << " [shape=box, label=\"place " << i << "\"];\n";
  }
  for (const auto& o : graph.objects()) {
    out << "  o" << o.id << " [shape=ellipse, label=\"" << escape(o.label.value_or("object " + std::to_string(o.id)))
        << "\"";
    if (matching) out << ", color=" << (matched.contains(o.id) ? "green" : "red");
    out << "];\n";
  }
  for (const auto& [i, j] : graph.pp_edges()) {
    out << "  p" << i << " -> p" << j << " [dir=none, style=solid];\n";
  }
  for (const auto& [p, o] : graph.po_edges()) {
    out << "  p" << p << " -> o" << o << " [dir=none, style=dashed];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace msg
