#include "mlpg/lang/cfg.hpp"

namespace mlpg::lang {

namespace {

class CfgBuilder {
 public:
  CfgBuilder(const TypedProgram& prog, NodeId fn) : ast_(prog.ast) { cfg_.function = fn; }

  Cfg run() {
    const auto& ch = ast_.node(cfg_.function).children;
    int entry = fresh();
    cfg_.blocks[static_cast<std::size_t>(entry)].items.push_back(ch[2]);
    cfg_.entry = entry;
    cfg_.exit = stmts(ch.back(), entry);
    return std::move(cfg_);
  }

 private:
  const Ast& ast_;
  Cfg cfg_;

  int fresh() {
    cfg_.blocks.emplace_back();
    return static_cast<int>(cfg_.blocks.size()) - 1;
  }

  void link(int from, int to) {
    cfg_.blocks[static_cast<std::size_t>(from)].succs.push_back(to);
    cfg_.blocks[static_cast<std::size_t>(to)].preds.push_back(from);
  }

  // Returns the block control falls through to, or -1 when terminated.
  int stmts(NodeId body, int cur) {
    if (!ast_.is_symbol(body, sym::Block)) return stmt(body, cur);
    for (NodeId s : ast_.node(body).children) {
      if (ast_.node(s).is_leaf()) continue;
      cur = stmt(s, cur);
      if (cur < 0) break;
    }
    return cur;
  }

  int stmt(NodeId s, int cur) {
    const auto& n = ast_.node(s);
    const auto& ch = n.children;
    auto& items = [&]() -> std::vector<NodeId>& { return cfg_.blocks[static_cast<std::size_t>(cur)].items; }();
    if (n.symbol == sym::IfStatement) {
      items.push_back(ch[2]);
      int then_b = fresh();
      link(cur, then_b);
      int then_end = stmts(ch[4], then_b);
      int else_end = cur;
      if (ch.size() == 7) {
        int else_b = fresh();
        link(cur, else_b);
        else_end = stmts(ch[6], else_b);
      }
      if (then_end < 0 && else_end < 0) return -1;
      int merge = fresh();
      if (then_end >= 0) link(then_end, merge);
      if (else_end >= 0) link(else_end, merge);
      return merge;
    }
    if (n.symbol == sym::WhileStatement) {
      int cond = fresh();
      link(cur, cond);
      cfg_.blocks[static_cast<std::size_t>(cond)].items.push_back(ch[2]);
      int body = fresh();
      link(cond, body);
      int body_end = stmts(ch[4], body);
      if (body_end >= 0) {
        link(body_end, cond);
        cfg_.back_edges.emplace_back(body_end, cond);
      }
      int post = fresh();
      link(cond, post);
      return post;
    }
    items.push_back(s);
    if (n.symbol == sym::ReturnStatement) return -1;
    return cur;
  }
};

}  // namespace

Cfg build_cfg(const TypedProgram& prog, NodeId function) { return CfgBuilder(prog, function).run(); }

}  // namespace mlpg::lang
