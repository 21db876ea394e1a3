#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mlpg/graph/program_graph.hpp"
#include "mlpg/lang/cfg.hpp"
#include "mlpg/lang/typecheck.hpp"

namespace mlpg::graph {

using TokenPair = std::pair<int, int>;

/// Edges between token indices (not graph node ids).
struct DataflowEdges {
  std::vector<TokenPair> last_use;
  std::vector<TokenPair> last_write;
  std::vector<TokenPair> computed_from;
};

/// Pretend `var` occupies `token` when running the dataflow analysis.
struct Substitution {
  int token = -1;
  lang::VarId var = lang::kNoVar;
};

/// A variable occurrence in evaluation order within a CFG item.
struct FlowEvent {
  int token = -1;
  lang::VarId var = lang::kNoVar;
  bool write = false;
};

/// Reads of an item happen before its writes; each group is in token order.
std::vector<FlowEvent> flow_events(const lang::TypedProgram& prog, lang::NodeId item);

/// May-analysis over the function's CFG. With `only` set, edges are produced
/// for that variable alone.
DataflowEdges dataflow_edges(const lang::TypedProgram& prog, const lang::Cfg& cfg,
                             const Substitution& sub = {}, lang::VarId only = lang::kNoVar);

/// ComputedFrom pairs (lhs token, rhs variable token) for one function.
std::vector<TokenPair> computed_from_edges(const lang::TypedProgram& prog, lang::NodeId function);

/// Nodes for every AST node plus Child and NextToken edges.
ProgramGraph syntax_graph(const lang::TypedProgram& prog);

void add_dataflow_edges(ProgramGraph& g, const lang::TypedProgram& prog);
void add_semantic_edges(ProgramGraph& g, const lang::TypedProgram& prog);

/// Full graph with forward and backward edges.
ProgramGraph build_graph(const lang::TypedProgram& prog, const std::string& file = "");

class SlotRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Usage tokens that qualify as VarMisuse slots (≥2 admissible candidates).
std::vector<int> misuse_slots(const lang::TypedProgram& prog);

/// Variables that have at least one non-declaration occurrence.
std::vector<lang::VarId> naming_targets(const lang::TypedProgram& prog);

TaskSample make_varmisuse_sample(const ProgramGraph& graph, const lang::TypedProgram& prog, int slot_token);
TaskSample make_varnaming_sample(const ProgramGraph& graph, const lang::TypedProgram& prog, lang::VarId var);

inline constexpr const char* kSlotLabel = "<SLOT>";

}  // namespace mlpg::graph
