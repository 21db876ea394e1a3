#include "mlpg/graph/builder.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "mlpg/encoder/subtokens.hpp"

namespace mlpg::graph {

using lang::NodeId;
using lang::TypedProgram;
using lang::VarId;

namespace {

using Set = std::vector<int>;  // sorted token indices

void merge_into(Set& dst, const Set& src) {
  if (src.empty()) return;
  Set out;
  out.reserve(dst.size() + src.size());
  std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(out));
  dst = std::move(out);
}

struct FlowState {
  std::vector<Set> last_occ;
  std::vector<Set> last_write;

  explicit FlowState(std::size_t n = 0) : last_occ(n), last_write(n) {}
  bool operator==(const FlowState&) const = default;

  void merge(const FlowState& o) {
    for (std::size_t i = 0; i < last_occ.size(); ++i) {
      merge_into(last_occ[i], o.last_occ[i]);
      merge_into(last_write[i], o.last_write[i]);
    }
  }
};

struct LocalEvent {
  int token;
  int var;  // local index
  bool write;
};

void transfer(FlowState& s, const std::vector<LocalEvent>& events, DataflowEdges* out) {
  for (const auto& e : events) {
    auto v = static_cast<std::size_t>(e.var);
    if (out) {
      for (int t : s.last_occ[v]) out->last_use.emplace_back(e.token, t);
      for (int t : s.last_write[v]) out->last_write.emplace_back(e.token, t);
    }
    s.last_occ[v] = {e.token};
    if (e.write) s.last_write[v] = {e.token};
  }
}

NodeId enclosing(const lang::Ast& ast, NodeId n, std::string_view symbol) {
  while (n != lang::kNoNode && !ast.is_symbol(n, symbol)) n = ast.node(n).parent;
  return n;
}

// Walks `root` collecting every node id (preorder).
void collect(const lang::Ast& ast, NodeId root, std::vector<NodeId>& out) {
  out.push_back(root);
  for (NodeId c : ast.node(root).children) collect(ast, c, out);
}

std::vector<int> occurrence_tokens(const TypedProgram& prog, NodeId root) {
  std::vector<int> out;
  for (int t : prog.ast.leaves(root))
    if (prog.occurrence(t)) out.push_back(t);
  return out;
}

void sort_unique(std::vector<TokenPair>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

int node_of(const TypedProgram& prog, int token) { return prog.ast.token_node[static_cast<std::size_t>(token)]; }

}  // namespace

std::vector<FlowEvent> flow_events(const TypedProgram& prog, NodeId item) {
  std::vector<FlowEvent> reads, writes;
  for (int t : prog.ast.leaves(item)) {
    const auto* occ = prog.occurrence(t);
    if (!occ) continue;
    (occ->is_write ? writes : reads).push_back(FlowEvent{t, occ->var, occ->is_write});
  }
  reads.insert(reads.end(), writes.begin(), writes.end());
  return reads;
}

DataflowEdges dataflow_edges(const TypedProgram& prog, const lang::Cfg& cfg, const Substitution& sub, VarId only) {
  std::map<VarId, int> local;
  std::vector<std::vector<LocalEvent>> events(cfg.size());
  for (std::size_t b = 0; b < cfg.size(); ++b) {
    for (NodeId item : cfg.blocks[b].items) {
      for (auto e : flow_events(prog, item)) {
        if (e.token == sub.token) e.var = sub.var;
        if (only != lang::kNoVar && e.var != only) continue;
        auto [it, _] = local.emplace(e.var, static_cast<int>(local.size()));
        events[b].push_back(LocalEvent{e.token, it->second, e.write});
      }
    }
  }

  const std::size_t nv = local.size();
  std::vector<FlowState> out(cfg.size(), FlowState(nv));
  auto in_state = [&](std::size_t b) {
    FlowState s(nv);
    for (int p : cfg.blocks[b].preds) s.merge(out[static_cast<std::size_t>(p)]);
    return s;
  };

  std::deque<std::size_t> work;
  std::vector<bool> queued(cfg.size(), true);
  for (std::size_t b = 0; b < cfg.size(); ++b) work.push_back(b);
  while (!work.empty()) {
    std::size_t b = work.front();
    work.pop_front();
    queued[b] = false;
    FlowState s = in_state(b);
    transfer(s, events[b], nullptr);
    if (s == out[b]) continue;
    out[b] = std::move(s);
    for (int succ : cfg.blocks[b].succs) {
      auto sb = static_cast<std::size_t>(succ);
      if (!queued[sb]) {
        queued[sb] = true;
        work.push_back(sb);
      }
    }
  }

  DataflowEdges edges;
  for (std::size_t b = 0; b < cfg.size(); ++b) {
    FlowState s = in_state(b);
    transfer(s, events[b], &edges);
  }
  edges.computed_from = computed_from_edges(prog, cfg.function);
  sort_unique(edges.last_use);
  sort_unique(edges.last_write);
  return edges;
}

std::vector<TokenPair> computed_from_edges(const TypedProgram& prog, NodeId function) {
  const auto& ast = prog.ast;
  std::vector<NodeId> nodes;
  collect(ast, function, nodes);
  std::vector<TokenPair> out;
  for (NodeId n : nodes) {
    const auto& ch = ast.node(n).children;
    std::vector<int> lhs;
    NodeId rhs = lang::kNoNode;
    if (ast.is_symbol(n, lang::sym::VariableDeclaration) && ch.size() == 7) {
      lhs.push_back(ast.node(ch[1]).token);
      rhs = ch[5];
    } else if (ast.is_symbol(n, lang::sym::AssignmentStatement)) {
      lhs = occurrence_tokens(prog, ch[0]);
      rhs = ch[2];
    } else {
      continue;
    }
    auto rhs_tokens = occurrence_tokens(prog, rhs);
    for (int l : lhs)
      for (int r : rhs_tokens) out.emplace_back(l, r);
  }
  sort_unique(out);
  return out;
}

ProgramGraph syntax_graph(const TypedProgram& prog) {
  const auto& ast = prog.ast;
  ProgramGraph g;
  std::set<std::string> types;
  for (const auto& n : ast.nodes) {
    std::optional<std::string> var, type;
    if (n.is_leaf()) {
      if (const auto* occ = prog.occurrence(n.token)) {
        var = prog.qualified_var(occ->var);
        type = prog.var(occ->var).type;
        types.insert(*type);
      }
    }
    g.add_node(ast.label(n.id), n.is_leaf(), std::move(var), std::move(type));
    for (NodeId c : n.children) g.add_edge(EdgeType::Child, n.id, c);
  }
  for (std::size_t t = 1; t < ast.tokens.size(); ++t)
    g.add_edge(EdgeType::NextToken, node_of(prog, static_cast<int>(t - 1)), node_of(prog, static_cast<int>(t)));
  for (const auto& t : types) g.type_sets[t] = prog.lattice.closure(t);
  return g;
}

void add_dataflow_edges(ProgramGraph& g, const TypedProgram& prog) {
  for (NodeId fn : prog.function_nodes) {
    auto cfg = lang::build_cfg(prog, fn);
    auto df = dataflow_edges(prog, cfg);
    for (auto [a, b] : df.last_use) g.add_edge(EdgeType::LastUse, node_of(prog, a), node_of(prog, b));
    for (auto [a, b] : df.last_write) g.add_edge(EdgeType::LastWrite, node_of(prog, a), node_of(prog, b));
    for (auto [a, b] : df.computed_from) g.add_edge(EdgeType::ComputedFrom, node_of(prog, a), node_of(prog, b));
  }
}

void add_semantic_edges(ProgramGraph& g, const TypedProgram& prog) {
  const auto& ast = prog.ast;

  std::map<VarId, int> previous;
  for (const auto& occ : prog.occurrences) {
    auto it = previous.find(occ.var);
    if (it != previous.end()) g.add_edge(EdgeType::LastLexicalUse, node_of(prog, occ.token), node_of(prog, it->second));
    previous[occ.var] = occ.token;
  }

  for (const auto& n : ast.nodes) {
    const auto& ch = n.children;
    if (ast.is_symbol(n.id, lang::sym::ReturnStatement)) {
      NodeId fn = enclosing(ast, n.id, lang::sym::FunctionDeclaration);
      g.add_edge(EdgeType::ReturnsTo, ch[0], ast.node(fn).children[1]);
    } else if (ast.is_symbol(n.id, lang::sym::InvocationExpression)) {
      auto callee = prog.callee_of.find(n.id);
      if (callee == prog.callee_of.end()) continue;
      auto sig = prog.functions.find(callee->second);
      if (sig == prog.functions.end() || sig->second.builtin) continue;
      const auto& args = ast.node(ch[1]).children;
      for (std::size_t i = 1, k = 0; i + 1 < args.size(); i += 2, ++k) {
        NodeId a = args[i];
        while (ast.is_symbol(a, lang::sym::ParenthesizedExpression)) a = ast.node(a).children[1];
        if (!ast.node(a).is_leaf() || !prog.occurrence(ast.node(a).token)) continue;
        if (k < sig->second.param_tokens.size())
          g.add_edge(EdgeType::FormalArgName, a, node_of(prog, sig->second.param_tokens[k]));
      }
    } else if (ast.is_symbol(n.id, lang::sym::IfStatement)) {
      NodeId cond = ch[2];
      std::set<VarId> cond_vars;
      for (int t : occurrence_tokens(prog, cond)) cond_vars.insert(prog.occurrence(t)->var);
      auto guard = [&](NodeId body, EdgeType kind) {
        for (int t : occurrence_tokens(prog, body))
          if (cond_vars.count(prog.occurrence(t)->var)) g.add_edge(kind, node_of(prog, t), cond);
      };
      guard(ch[4], EdgeType::GuardedBy);
      if (ch.size() == 7) guard(ch[6], EdgeType::GuardedByNegation);
    }
  }
}

ProgramGraph build_graph(const TypedProgram& prog, const std::string& file) {
  ProgramGraph g = syntax_graph(prog);
  g.file = file;
  add_dataflow_edges(g, prog);
  add_semantic_edges(g, prog);
  g.normalize();
  return add_backward_edges(std::move(g));
}

std::vector<int> misuse_slots(const TypedProgram& prog) {
  std::vector<int> out;
  for (const auto& occ : prog.occurrences)
    if (lang::vars_in_scope(prog, occ.token).size() >= 2) out.push_back(occ.token);
  return out;
}

std::vector<VarId> naming_targets(const TypedProgram& prog) {
  std::set<VarId> used;
  for (const auto& occ : prog.occurrences)
    if (!occ.is_decl) used.insert(occ.var);
  return {used.begin(), used.end()};
}

TaskSample make_varmisuse_sample(const ProgramGraph& graph, const TypedProgram& prog, int slot_token) {
  const auto* occ = prog.occurrence(slot_token);
  if (!occ || occ->is_decl) throw SlotRejected("token " + std::to_string(slot_token) + " is not a variable use");
  auto cands = lang::vars_in_scope(prog, slot_token);
  if (cands.size() < 2)
    throw SlotRejected("slot at token " + std::to_string(slot_token) + " has " + std::to_string(cands.size()) +
                       " candidate(s)");
  const VarId gold = occ->var;
  if (std::none_of(cands.begin(), cands.end(), [&](const auto& c) { return c.first == gold; }))
    throw SlotRejected("gold variable is not among the candidates");

  TaskSample s;
  s.kind = TaskKind::VarMisuse;
  s.graph = graph;
  auto& g = s.graph;
  for (int i = kNumForwardEdgeTypes; i < kNumEdgeTypes; ++i) g.edges[static_cast<std::size_t>(i)].clear();

  const int slot = node_of(prog, slot_token);
  for (int i = 0; i < kNumForwardEdgeTypes; ++i) {
    if (!depends_on_slot_variable(edge_type(i))) continue;
    auto& list = g.edges[static_cast<std::size_t>(i)];
    std::erase_if(list, [&](const Edge& e) { return e.src == slot || e.dst == slot; });
  }
  auto& slot_node = g.nodes[static_cast<std::size_t>(slot)];
  slot_node.label = kSlotLabel;
  slot_node.var.reset();
  slot_node.type.reset();

  auto cfg = lang::build_cfg(prog, prog.var(gold).function);
  for (const auto& [v, type] : cands) {
    const auto& var = prog.var(v);
    int c = g.add_node(var.name, false, prog.qualified_var(v), type);
    auto map = [&](int token) { return token == slot_token ? c : node_of(prog, token); };

    auto df = dataflow_edges(prog, cfg, Substitution{slot_token, v}, v);
    for (auto [a, b] : df.last_use)
      if (a == slot_token || b == slot_token) g.add_edge(EdgeType::LastUse, map(a), map(b));
    for (auto [a, b] : df.last_write)
      if (a == slot_token || b == slot_token) g.add_edge(EdgeType::LastWrite, map(a), map(b));

    int prev = -1, next = -1;
    for (const auto& o : prog.occurrences) {
      if (o.var != v || o.token == slot_token) continue;
      if (o.token < slot_token) prev = o.token;
      if (o.token > slot_token && next < 0) next = o.token;
    }
    if (prev >= 0) g.add_edge(EdgeType::LastLexicalUse, c, node_of(prog, prev));
    if (next >= 0) g.add_edge(EdgeType::LastLexicalUse, node_of(prog, next), c);

    s.candidates.push_back(Candidate{c, var.name, v == gold});
  }
  g.normalize();
  g = add_backward_edges(std::move(g));
  s.slot_node = slot;
  s.slot_var = prog.qualified_var(gold);
  return s;
}

TaskSample make_varnaming_sample(const ProgramGraph& graph, const TypedProgram& prog, VarId var) {
  TaskSample s;
  s.kind = TaskKind::VarNaming;
  s.graph = graph;
  for (const auto& occ : prog.occurrences) {
    if (occ.var != var) continue;
    int n = node_of(prog, occ.token);
    auto& node = s.graph.nodes[static_cast<std::size_t>(n)];
    node.label = kSlotLabel;
    node.var.reset();
    s.slot_tokens.push_back(n);
  }
  if (s.slot_tokens.empty()) throw SlotRejected("variable has no occurrences");
  s.gold_subtokens = encoder::split_subtokens(prog.var(var).name);
  s.slot_var = prog.qualified_var(var);
  return s;
}

}  // namespace mlpg::graph
