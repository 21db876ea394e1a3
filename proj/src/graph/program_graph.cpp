#include "mlpg/graph/program_graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace mlpg::graph {

namespace {
constexpr std::array<std::string_view, kNumEdgeTypes> kNames = {
    "Child",          "NextToken",          "LastUse",       "LastWrite",
    "ComputedFrom",   "LastLexicalUse",     "ReturnsTo",     "FormalArgName",
    "GuardedBy",      "GuardedByNegation",  "Child'",        "NextToken'",
    "LastUse'",       "LastWrite'",         "ComputedFrom'", "LastLexicalUse'",
    "ReturnsTo'",     "FormalArgName'",     "GuardedBy'",    "GuardedByNegation'",
};
}  // namespace

std::string_view name(EdgeType k) { return kNames[static_cast<std::size_t>(index(k))]; }

std::optional<EdgeType> parse_edge_type(std::string_view n) {
  if (n == "LastRead") return EdgeType::LastUse;
  if (n == "LastRead'") return EdgeType::LastUseBack;
  for (int i = 0; i < kNumEdgeTypes; ++i)
    if (kNames[static_cast<std::size_t>(i)] == n) return edge_type(i);
  return std::nullopt;
}

bool depends_on_slot_variable(EdgeType k) {
  if (is_backward(k)) k = dual(k);
  return k == EdgeType::LastUse || k == EdgeType::LastWrite || k == EdgeType::LastLexicalUse ||
         k == EdgeType::GuardedBy || k == EdgeType::GuardedByNegation;
}

int ProgramGraph::add_node(std::string label, bool is_token, std::optional<std::string> var,
                           std::optional<std::string> type) {
  int id = static_cast<int>(nodes.size());
  nodes.push_back(GraphNode{id, std::move(label), is_token, std::move(var), std::move(type)});
  return id;
}

std::size_t ProgramGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& l : edges) n += l.size();
  return n;
}

void ProgramGraph::normalize() {
  for (auto& l : edges) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
}

std::vector<int> ProgramGraph::token_sequence() const {
  std::vector<int> next(nodes.size(), -1);
  std::vector<bool> has_prev(nodes.size(), false);
  for (const auto& e : of(EdgeType::NextToken)) {
    next[static_cast<std::size_t>(e.src)] = e.dst;
    has_prev[static_cast<std::size_t>(e.dst)] = true;
  }
  std::vector<int> seq;
  for (const auto& n : nodes) {
    if (!n.is_token || has_prev[static_cast<std::size_t>(n.id)]) continue;
    if (next[static_cast<std::size_t>(n.id)] < 0 && !seq.empty()) continue;
    for (int cur = n.id; cur >= 0; cur = next[static_cast<std::size_t>(cur)]) seq.push_back(cur);
    break;
  }
  return seq;
}

ProgramGraph add_backward_edges(ProgramGraph g) {
  for (int i = 0; i < kNumForwardEdgeTypes; ++i) {
    auto& back = g.edges[static_cast<std::size_t>(i + kNumForwardEdgeTypes)];
    back.clear();
    for (const auto& e : g.edges[static_cast<std::size_t>(i)]) back.push_back({e.dst, e.src});
    std::sort(back.begin(), back.end());
    back.erase(std::unique(back.begin(), back.end()), back.end());
  }
  return g;
}

int TaskSample::gold_index() const {
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].gold) return static_cast<int>(i);
  return -1;
}

nlohmann::json to_json(const ProgramGraph& g) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"id", n.id},
                     {"label", n.label},
                     {"is_token", n.is_token},
                     {"var", n.var ? json(*n.var) : json(nullptr)},
                     {"type", n.type ? json(*n.type) : json(nullptr)}});
  }
  json edges = json::object();
  for (int i = 0; i < kNumForwardEdgeTypes; ++i) {
    json list = json::array();
    for (const auto& e : g.edges[static_cast<std::size_t>(i)]) list.push_back({e.src, e.dst});
    edges[std::string(name(edge_type(i)))] = std::move(list);
  }
  json j = {{"nodes", std::move(nodes)},
            {"edges", std::move(edges)},
            {"slot", nullptr},
            {"candidates", json::array()},
            {"gold_subtokens", nullptr}};
  if (!g.file.empty()) j["file"] = g.file;
  if (!g.type_sets.empty()) j["types"] = g.type_sets;
  return j;
}

nlohmann::json to_json(const TaskSample& s) {
  using nlohmann::json;
  json j = to_json(s.graph);
  if (s.kind == TaskKind::VarMisuse) {
    j["slot"] = {{"task", "misuse"}, {"node", s.slot_node}};
    json cands = json::array();
    for (const auto& c : s.candidates) cands.push_back({{"node", c.node}, {"name", c.name}, {"gold", c.gold}});
    j["candidates"] = std::move(cands);
  } else {
    j["slot"] = {{"task", "naming"}, {"tokens", s.slot_tokens}};
    j["gold_subtokens"] = s.gold_subtokens;
  }
  return j;
}

ProgramGraph graph_from_json(const nlohmann::json& j) {
  ProgramGraph g;
  for (const auto& n : j.at("nodes")) {
    GraphNode node;
    node.id = n.at("id").get<int>();
    node.label = n.at("label").get<std::string>();
    node.is_token = n.at("is_token").get<bool>();
    if (n.contains("var") && !n["var"].is_null()) node.var = n["var"].get<std::string>();
    if (n.contains("type") && !n["type"].is_null()) node.type = n["type"].get<std::string>();
    if (node.id != static_cast<int>(g.nodes.size())) throw std::runtime_error("graph JSON: node ids must be dense");
    g.nodes.push_back(std::move(node));
  }
  const int n = static_cast<int>(g.nodes.size());
  for (const auto& [key, list] : j.at("edges").items()) {
    auto k = parse_edge_type(key);
    if (!k) throw std::runtime_error("graph JSON: unknown edge type '" + key + "'");
    if (is_backward(*k)) continue;
    for (const auto& e : list) {
      int s = e.at(0).get<int>(), d = e.at(1).get<int>();
      if (s < 0 || d < 0 || s >= n || d >= n) throw std::runtime_error("graph JSON: edge endpoint out of range");
      g.add_edge(*k, s, d);
    }
  }
  if (j.contains("file")) g.file = j["file"].get<std::string>();
  if (j.contains("types")) g.type_sets = j["types"].get<std::map<std::string, std::vector<std::string>>>();
  g.normalize();
  return add_backward_edges(std::move(g));
}

TaskSample sample_from_json(const nlohmann::json& j) {
  TaskSample s;
  s.graph = graph_from_json(j);
  const auto& slot = j.at("slot");
  if (slot.is_null()) throw std::runtime_error("graph JSON: not a task sample (slot is null)");
  if (slot.at("task").get<std::string>() == "misuse") {
    s.kind = TaskKind::VarMisuse;
    s.slot_node = slot.at("node").get<int>();
    for (const auto& c : j.at("candidates"))
      s.candidates.push_back(Candidate{c.at("node").get<int>(), c.at("name").get<std::string>(), c.at("gold").get<bool>()});
  } else {
    s.kind = TaskKind::VarNaming;
    s.slot_tokens = slot.at("tokens").get<std::vector<int>>();
    s.gold_subtokens = j.at("gold_subtokens").get<std::vector<std::string>>();
  }
  return s;
}

}  // namespace mlpg::graph
