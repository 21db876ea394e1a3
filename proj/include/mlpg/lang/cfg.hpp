#pragma once

#include <utility>
#include <vector>

#include "mlpg/lang/typecheck.hpp"

namespace mlpg::lang {

/// Items are statement nodes, or condition expressions for if/while, or the
/// function's ParameterList (entry block only).
struct BasicBlock {
  std::vector<NodeId> items;
  std::vector<int> succs;
  std::vector<int> preds;
};

/// Statement-level control-flow graph of one function.
struct Cfg {
  NodeId function = kNoNode;
  std::vector<BasicBlock> blocks;
  int entry = 0;
  int exit = -1;  // fall-through block, -1 when every path returns
  std::vector<std::pair<int, int>> back_edges;

  std::size_t size() const { return blocks.size(); }
};

Cfg build_cfg(const TypedProgram& prog, NodeId function);

}  // namespace mlpg::lang
