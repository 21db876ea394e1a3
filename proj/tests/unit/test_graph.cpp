#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "mlpg/graph/builder.hpp"
#include "path_oracle.hpp"
#include "random_programs.hpp"

using namespace mlpg;
using namespace mlpg::graph;
using lang::NodeId;
using lang::TypedProgram;
using lang::VarId;
using testing_support::PathOracle;

namespace {

std::set<TokenPair> as_set(const std::vector<TokenPair>& v) { return {v.begin(), v.end()}; }

const char* kLoopProgram =
    "fn Foo() -> (int, int) { return (1, 2); }\n"
    "fn main() { var x: int; var y: int; (x, y) = Foo(); while (x > 0) x = x + y; }";

// Maps the six non-declaration occurrences in main to 1..6.
std::map<int, int> loop_occurrence_index(const TypedProgram& p) {
  std::map<int, int> idx;
  int k = 0;
  for (const auto& o : p.occurrences)
    if (!o.is_decl && p.var(o.var).function == p.function_nodes[1]) idx[o.token] = ++k;
  return idx;
}

std::set<TokenPair> renumber(const std::vector<TokenPair>& edges, const std::map<int, int>& idx) {
  std::set<TokenPair> out;
  for (auto [a, b] : edges)
    if (idx.count(a) && idx.count(b)) out.insert({idx.at(a), idx.at(b)});
  return out;
}

int token_of(const TypedProgram& p, const std::string& text, int n) {
  for (std::size_t i = 0; i < p.ast.tokens.size(); ++i)
    if (p.ast.tokens[i].text == text && n-- == 0) return static_cast<int>(i);
  return -1;
}

int node_of(const TypedProgram& p, int token) { return p.ast.token_node[static_cast<std::size_t>(token)]; }

bool has_edge(const ProgramGraph& g, EdgeType k, int s, int d) {
  const auto& l = g.of(k);
  return std::binary_search(l.begin(), l.end(), Edge{s, d});
}

}  // namespace

TEST(EdgeTypes, DualsAndNames) {
  for (int i = 0; i < kNumEdgeTypes; ++i) {
    auto k = edge_type(i);
    EXPECT_EQ(dual(dual(k)), k);
    EXPECT_EQ(parse_edge_type(name(k)), k);
  }
  EXPECT_EQ(parse_edge_type("LastRead"), EdgeType::LastUse);
  EXPECT_FALSE(parse_edge_type("Bogus"));
}

TEST(Dataflow, LoopExampleEdgeForEdge) {
  auto p = lang::compile(kLoopProgram);
  auto cfg = lang::build_cfg(p, p.function_nodes[1]);
  auto df = dataflow_edges(p, cfg);
  auto idx = loop_occurrence_index(p);
  ASSERT_EQ(idx.size(), 6u);
  EXPECT_EQ(renumber(df.last_use, idx), (std::set<TokenPair>{{3, 1}, {3, 4}, {4, 5}, {5, 3}, {6, 2}, {6, 6}}));
  EXPECT_EQ(renumber(df.last_write, idx),
            (std::set<TokenPair>{{3, 1}, {3, 4}, {4, 1}, {4, 4}, {5, 1}, {5, 4}, {6, 2}}));
  EXPECT_EQ(renumber(df.computed_from, idx), (std::set<TokenPair>{{4, 5}, {4, 6}}));
}

TEST(Dataflow, ParameterIsInitialWrite) {
  auto p = lang::compile("fn f(a: int) -> int { return a; }");
  auto df = dataflow_edges(p, lang::build_cfg(p, p.function_nodes[0]));
  int decl = token_of(p, "a", 0), use = token_of(p, "a", 1);
  EXPECT_EQ(as_set(df.last_write), (std::set<TokenPair>{{use, decl}}));
  PathOracle oracle(p, p.occurrence(use)->var);
  oracle.run(p.function_nodes[0]);
  EXPECT_EQ(as_set(df.last_write), oracle.last_write);
}

TEST(Dataflow, StraightLineHasNoSelfLoops) {
  auto p = lang::compile("fn f() { var a: int = 1; var b: int = a; }");
  auto df = dataflow_edges(p, lang::build_cfg(p, p.function_nodes[0]));
  int a_decl = token_of(p, "a", 0), a_use = token_of(p, "a", 1);
  EXPECT_TRUE(as_set(df.last_use).count({a_use, a_decl}));
  for (auto [s, d] : df.last_use) EXPECT_NE(s, d);
  for (auto [s, d] : df.last_write) EXPECT_NE(s, d);
}

TEST(Dataflow, MatchesPathEnumerationOnRandomPrograms) {
  int checked = 0;
  for (unsigned seed = 1; seed <= 150; ++seed) {
    testing_support::RandomProgram gen(seed);
    auto src = gen.generate();
    TypedProgram p;
    try {
      p = lang::compile(src);
    } catch (const lang::TypeError&) {
      continue;  // e.g. statements after an unconditional return
    }
    for (NodeId fn : p.function_nodes) {
      auto df = dataflow_edges(p, lang::build_cfg(p, fn));
      std::set<TokenPair> lu, lw;
      for (const auto& var : p.vars) {
        if (var.function != fn) continue;
        PathOracle oracle(p, var.id);
        oracle.run(fn);
        lu.insert(oracle.last_use.begin(), oracle.last_use.end());
        lw.insert(oracle.last_write.begin(), oracle.last_write.end());
      }
      EXPECT_EQ(as_set(df.last_use), lu) << "seed " << seed << "\n" << src;
      EXPECT_EQ(as_set(df.last_write), lw) << "seed " << seed << "\n" << src;
    }
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(Syntax, TokenChainAndChildren) {
  auto p = lang::compile("fn f(x: bool) { notNull(x); }");
  auto g = syntax_graph(p);
  EXPECT_EQ(g.of(EdgeType::NextToken).size(), p.ast.tokens.size() - 1);
  EXPECT_EQ(g.of(EdgeType::Child).size(), g.size() - 1);
  auto seq = g.token_sequence();
  ASSERT_EQ(seq.size(), p.ast.tokens.size());
  for (std::size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(g.nodes[static_cast<std::size_t>(seq[i])].label, p.ast.tokens[i].text);
}

TEST(Syntax, SingleTokenHasNoNextToken) {
  auto p = lang::compile("type A;");
  auto p1 = lang::compile("");
  EXPECT_EQ(syntax_graph(p1).of(EdgeType::NextToken).size(), 0u);
  EXPECT_EQ(syntax_graph(p).of(EdgeType::NextToken).size(), 2u);
}

TEST(Semantic, GuardsFollowConditionVariables) {
  auto p = lang::compile(
      "fn f(x: int, y: int, c: bool) { var z: int = 0;\n"
      "  if (x > y) { z = x; } else { z = y; }\n"
      "  if (c) { z = 1; } else { z = 2; } }");
  auto g = build_graph(p);
  NodeId cond = p.ast.node(p.ast.node(node_of(p, token_of(p, "if", 0))).parent).children[2];
  EXPECT_TRUE(has_edge(g, EdgeType::GuardedBy, node_of(p, token_of(p, "x", 2)), cond));
  EXPECT_TRUE(has_edge(g, EdgeType::GuardedByNegation, node_of(p, token_of(p, "y", 2)), cond));
  // z never occurs in a condition.
  for (auto k : {EdgeType::GuardedBy, EdgeType::GuardedByNegation})
    for (const auto& e : g.of(k)) EXPECT_NE(g.nodes[static_cast<std::size_t>(e.src)].label, "z");
  EXPECT_EQ(g.of(EdgeType::GuardedBy).size(), 1u);
  EXPECT_EQ(g.of(EdgeType::GuardedByNegation).size(), 1u);
}

TEST(Semantic, FormalArgNameAndReturnsTo) {
  auto p = lang::compile(
      "fn consume(stream: string) -> int { return len(stream); }\n"
      "fn main(bar: string) { var n: int = consume(bar); print(bar); }");
  auto g = build_graph(p);
  int bar_arg = node_of(p, token_of(p, "bar", 1));
  int stream_decl = node_of(p, token_of(p, "stream", 0));
  EXPECT_TRUE(has_edge(g, EdgeType::FormalArgName, bar_arg, stream_decl));
  EXPECT_EQ(g.of(EdgeType::FormalArgName).size(), 1u);  // builtins resolve to nothing
  EXPECT_TRUE(has_edge(g, EdgeType::ReturnsTo, node_of(p, token_of(p, "return", 0)), node_of(p, token_of(p, "consume", 0))));
}

TEST(Semantic, LastLexicalUseIgnoresControlFlow) {
  auto p = lang::compile("fn f(a: int) { while (a > 0) { a = a - 1; } print(str(a)); }");
  auto g = build_graph(p);
  std::vector<int> occ;
  for (const auto& o : p.occurrences) occ.push_back(node_of(p, o.token));
  ASSERT_EQ(occ.size(), 5u);
  EXPECT_EQ(g.of(EdgeType::LastLexicalUse).size(), 4u);
  for (std::size_t i = 1; i < occ.size(); ++i) EXPECT_TRUE(has_edge(g, EdgeType::LastLexicalUse, occ[i], occ[i - 1]));
}

TEST(Graph, BackwardEdgesAreTransposes) {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    try {
      auto p = lang::compile(testing_support::RandomProgram(seed).generate());
      auto g = build_graph(p);
      for (int i = 0; i < kNumForwardEdgeTypes; ++i) {
        auto k = edge_type(i);
        ASSERT_EQ(g.of(k).size(), g.of(dual(k)).size());
        for (const auto& e : g.of(k)) EXPECT_TRUE(has_edge(g, dual(k), e.dst, e.src));
      }
    } catch (const lang::TypeError&) {
    }
  }
  ProgramGraph g;
  g.add_node("a", false);
  g.add_node("b", false);
  g.add_edge(EdgeType::Child, 0, 1);
  g = add_backward_edges(g);
  EXPECT_EQ(g.of(EdgeType::ChildBack), (std::vector<Edge>{{1, 0}}));
  EXPECT_EQ(add_backward_edges(ProgramGraph{}).edge_count(), 0u);
}

TEST(Graph, JsonRoundTrip) {
  auto p = lang::compile(kLoopProgram);
  auto g = build_graph(p, "loop.ml0");
  auto j = to_json(g);
  EXPECT_FALSE(j["edges"].contains("Child'"));
  EXPECT_TRUE(j["slot"].is_null());
  auto back = graph_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.edges, g.edges);
  EXPECT_EQ(back.size(), g.size());
  EXPECT_EQ(back.file, "loop.ml0");

  auto renamed = j;
  renamed["edges"]["LastRead"] = renamed["edges"]["LastUse"];
  renamed["edges"].erase("LastUse");
  EXPECT_EQ(graph_from_json(renamed).of(EdgeType::LastUse), g.of(EdgeType::LastUse));

  auto bad = j;
  bad["edges"]["Child"].push_back({0, 100000});
  EXPECT_THROW(graph_from_json(bad), std::runtime_error);
}

TEST(Misuse, SlotWithTwoCandidates) {
  auto p = lang::compile("fn f(a: int, b: int) -> int { return a; }");
  auto g = build_graph(p);
  int slot = token_of(p, "a", 1);
  auto s = make_varmisuse_sample(g, p, slot);
  ASSERT_EQ(s.candidates.size(), 2u);
  EXPECT_EQ(std::count_if(s.candidates.begin(), s.candidates.end(), [](auto& c) { return c.gold; }), 1);
  EXPECT_EQ(s.candidates[static_cast<std::size_t>(s.gold_index())].name, "a");
  EXPECT_EQ(s.graph.nodes[static_cast<std::size_t>(s.slot_node)].label, kSlotLabel);
  auto round = sample_from_json(nlohmann::json::parse(to_json(s).dump()));
  EXPECT_EQ(round.slot_node, s.slot_node);
  EXPECT_EQ(round.gold_index(), s.gold_index());
  EXPECT_EQ(round.graph.edges, s.graph.edges);
}

TEST(Misuse, RejectsSingleCandidate) {
  auto p = lang::compile("fn f(a: int, s: string) -> int { return a; }");
  EXPECT_THROW(make_varmisuse_sample(build_graph(p), p, token_of(p, "a", 1)), SlotRejected);
  EXPECT_TRUE(misuse_slots(p).empty());
}

TEST(Misuse, GuardEdgesAbsentOnSlotAndCandidates) {
  auto p = lang::compile("fn f(x: int, y: int) { if (x > y) { print(str(x)); } }");
  auto g = build_graph(p);
  int slot_tok = token_of(p, "x", 2);
  ASSERT_TRUE(has_edge(g, EdgeType::GuardedBy, node_of(p, slot_tok), p.ast.node(node_of(p, token_of(p, ">", 0))).parent));
  auto s = make_varmisuse_sample(g, p, slot_tok);
  std::set<int> touched{s.slot_node};
  for (const auto& c : s.candidates) touched.insert(c.node);
  for (auto k : {EdgeType::GuardedBy, EdgeType::GuardedByNegation})
    for (const auto& e : s.graph.of(k)) EXPECT_FALSE(touched.count(e.src) || touched.count(e.dst));
}

// Checks locality, gold consistency and literal-substitution equivalence for
// every slot of a set of random programs.
TEST(Misuse, SurgeryProperties) {
  int slots = 0;
  for (unsigned seed = 1; seed <= 40; ++seed) {
    std::string src = testing_support::RandomProgram(seed, 2).generate();
    TypedProgram p;
    try {
      p = lang::compile(src);
    } catch (const lang::TypeError&) {
      continue;
    }
    auto g = build_graph(p);
    for (int slot_tok : misuse_slots(p)) {
      auto s = make_varmisuse_sample(g, p, slot_tok);
      const int slot = s.slot_node;
      const int n0 = static_cast<int>(g.size());
      ++slots;

      // Locality: edges not touching the slot or new nodes are unchanged.
      for (int i = 0; i < kNumEdgeTypes; ++i) {
        auto k = edge_type(i);
        std::vector<Edge> before, after;
        for (const auto& e : g.of(k))
          if (e.src != slot && e.dst != slot) before.push_back(e);
        for (const auto& e : s.graph.of(k))
          if (e.src != slot && e.dst != slot && e.src < n0 && e.dst < n0) after.push_back(e);
        ASSERT_EQ(before, after) << name(k);
        if (!depends_on_slot_variable(k)) {
          for (const auto& e : g.of(k))
            if (e.src == slot || e.dst == slot) EXPECT_TRUE(has_edge(s.graph, k, e.src, e.dst));
        }
      }

      for (const auto& c : s.candidates) {
        // Edge sets incident to the candidate, expressed with the slot node in its place.
        auto incident = [&](const ProgramGraph& graph, int node, EdgeType k) {
          std::set<Edge> out;
          for (const auto& e : graph.of(k)) {
            if (e.src != node && e.dst != node) continue;
            out.insert({e.src == node ? slot : e.src, e.dst == node ? slot : e.dst});
          }
          return out;
        };
        if (c.gold) {
          for (auto k : {EdgeType::LastUse, EdgeType::LastWrite, EdgeType::LastLexicalUse})
            EXPECT_EQ(incident(s.graph, c.node, k), incident(g, slot, k)) << name(k);
        }
        // Literal substitution: rename the slot token and recompile.
        std::string edited;
        for (std::size_t t = 0; t < p.ast.tokens.size(); ++t)
          edited += (static_cast<int>(t) == slot_tok ? c.name : p.ast.tokens[t].text) + " ";
        auto q = lang::compile(edited);
        auto gq = build_graph(q);
        for (auto k : {EdgeType::LastUse, EdgeType::LastWrite, EdgeType::LastLexicalUse})
          EXPECT_EQ(incident(s.graph, c.node, k), incident(gq, slot, k)) << name(k) << " seed " << seed;
      }
    }
  }
  EXPECT_GT(slots, 100);
}

TEST(Naming, RelabelsAllOccurrences) {
  auto p = lang::compile("fn f(inputStreamBuffer: string, n: int) { print(inputStreamBuffer); }");
  auto g = build_graph(p);
  auto targets = naming_targets(p);
  ASSERT_EQ(targets.size(), 1u);  // n is never used
  auto s = make_varnaming_sample(g, p, targets[0]);
  EXPECT_EQ(s.slot_tokens.size(), 2u);
  EXPECT_EQ(s.gold_subtokens, (std::vector<std::string>{"input", "stream", "buffer"}));
  for (int n : s.slot_tokens) EXPECT_EQ(s.graph.nodes[static_cast<std::size_t>(n)].label, kSlotLabel);
  EXPECT_EQ(s.graph.edges, g.edges);
}

TEST(Naming, TwoVariablesTwoSamples) {
  auto p = lang::compile("fn f(a: int, b: int) -> int { return a + b; }");
  auto g = build_graph(p);
  auto targets = naming_targets(p);
  ASSERT_EQ(targets.size(), 2u);
  auto s0 = make_varnaming_sample(g, p, targets[0]);
  auto s1 = make_varnaming_sample(g, p, targets[1]);
  EXPECT_EQ(s0.gold_subtokens, std::vector<std::string>{"a"});
  EXPECT_EQ(s1.gold_subtokens, std::vector<std::string>{"b"});
  EXPECT_EQ(g.nodes[static_cast<std::size_t>(s0.slot_tokens[0])].label, "a");
}
