#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mlpg::graph {

enum class EdgeType : std::uint8_t {
  Child,
  NextToken,
  LastUse,
  LastWrite,
  ComputedFrom,
  LastLexicalUse,
  ReturnsTo,
  FormalArgName,
  GuardedBy,
  GuardedByNegation,
  // Backward duals, same order.
  ChildBack,
  NextTokenBack,
  LastUseBack,
  LastWriteBack,
  ComputedFromBack,
  LastLexicalUseBack,
  ReturnsToBack,
  FormalArgNameBack,
  GuardedByBack,
  GuardedByNegationBack,
};

inline constexpr int kNumForwardEdgeTypes = 10;
inline constexpr int kNumEdgeTypes = 2 * kNumForwardEdgeTypes;

constexpr int index(EdgeType k) { return static_cast<int>(k); }
constexpr EdgeType edge_type(int i) { return static_cast<EdgeType>(i); }
constexpr bool is_backward(EdgeType k) { return index(k) >= kNumForwardEdgeTypes; }
constexpr EdgeType dual(EdgeType k) {
  int i = index(k);
  return edge_type(i < kNumForwardEdgeTypes ? i + kNumForwardEdgeTypes : i - kNumForwardEdgeTypes);
}

std::string_view name(EdgeType k);

/// Accepts forward names, backward names and the `LastRead` alias of LastUse.
std::optional<EdgeType> parse_edge_type(std::string_view name);

/// Edge types whose presence at a slot depends on which variable fills it.
bool depends_on_slot_variable(EdgeType k);

struct Edge {
  int src = 0;
  int dst = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct GraphNode {
  int id = 0;
  std::string label;
  bool is_token = false;
  std::optional<std::string> var;
  std::optional<std::string> type;
};

/// Nodes are AST nodes and tokens; edges are stored per edge type.
struct ProgramGraph {
  std::vector<GraphNode> nodes;
  std::array<std::vector<Edge>, kNumEdgeTypes> edges;
  std::string file;
  /// Transitive supertype set for every type name that labels a node.
  std::map<std::string, std::vector<std::string>> type_sets;

  int add_node(std::string label, bool is_token, std::optional<std::string> var = std::nullopt,
               std::optional<std::string> type = std::nullopt);
  void add_edge(EdgeType k, int src, int dst) { edges[static_cast<std::size_t>(index(k))].push_back({src, dst}); }
  std::vector<Edge>& of(EdgeType k) { return edges[static_cast<std::size_t>(index(k))]; }
  const std::vector<Edge>& of(EdgeType k) const { return edges[static_cast<std::size_t>(index(k))]; }
  std::size_t size() const { return nodes.size(); }
  std::size_t edge_count() const;

  /// Sorts and deduplicates every edge list.
  void normalize();

  /// Token nodes in source order, following the NextToken chain.
  std::vector<int> token_sequence() const;
};

/// Replaces every backward list with the transpose of its forward dual.
ProgramGraph add_backward_edges(ProgramGraph graph);

enum class TaskKind { VarMisuse, VarNaming };

struct Candidate {
  int node = -1;
  std::string name;
  bool gold = false;
};

struct TaskSample {
  ProgramGraph graph;
  TaskKind kind = TaskKind::VarMisuse;
  int slot_node = -1;              // VarMisuse
  std::vector<int> slot_tokens;    // VarNaming
  std::vector<Candidate> candidates;
  std::vector<std::string> gold_subtokens;
  std::string slot_var;  // qualified id of the hidden variable

  int gold_index() const;
};

/// Graph JSON. Backward lists are omitted and rebuilt on load.
nlohmann::json to_json(const ProgramGraph& g);
nlohmann::json to_json(const TaskSample& s);
ProgramGraph graph_from_json(const nlohmann::json& j);
TaskSample sample_from_json(const nlohmann::json& j);

}  // namespace mlpg::graph
