#include "mlpg/lang/typecheck.hpp"

#include <algorithm>
#include <utility>

namespace mlpg::lang {

namespace {
const std::vector<std::string> kNoSupers;
constexpr std::string_view kBuiltinTypes[] = {"int", "bool", "string", "void"};
}  // namespace

TypeLattice::TypeLattice() {
  for (auto b : kBuiltinTypes) {
    supers_.emplace(std::string(b), std::vector<std::string>{});
    order_.emplace_back(b);
  }
}

void TypeLattice::declare(const std::string& name, const std::vector<std::string>& supertypes, std::size_t offset) {
  if (contains(name)) throw TypeError("type '" + name + "' redeclared", offset);
  for (const auto& s : supertypes) {
    if (!contains(s)) throw TypeError("unknown supertype '" + s + "'", offset);
    if (is_builtin(s)) throw TypeError("cannot extend builtin type '" + s + "'", offset);
  }
  // Supertypes must already exist, so the relation stays acyclic.
  supers_.emplace(name, supertypes);
  order_.push_back(name);
}

bool TypeLattice::contains(std::string_view name) const { return supers_.find(name) != supers_.end(); }

bool TypeLattice::is_builtin(std::string_view name) const {
  return std::find(std::begin(kBuiltinTypes), std::end(kBuiltinTypes), name) != std::end(kBuiltinTypes);
}

const std::vector<std::string>& TypeLattice::direct_supertypes(std::string_view name) const {
  auto it = supers_.find(name);
  return it == supers_.end() ? kNoSupers : it->second;
}

std::vector<std::string> TypeLattice::closure(std::string_view name) const {
  std::set<std::string> seen;
  std::vector<std::string> stack{std::string(name)};
  while (!stack.empty()) {
    std::string cur = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(cur).second) continue;
    for (const auto& s : direct_supertypes(cur)) stack.push_back(s);
  }
  seen.erase(std::string(name));
  std::vector<std::string> out{std::string(name)};
  out.insert(out.end(), seen.begin(), seen.end());
  return out;
}

bool TypeLattice::assignable(std::string_view from, std::string_view to) const {
  if (from == to) return true;
  auto c = closure(from);
  return std::find(c.begin(), c.end(), to) != c.end();
}

std::vector<std::string> TypeLattice::user_types() const {
  std::vector<std::string> out;
  for (const auto& t : order_)
    if (!is_builtin(t)) out.push_back(t);
  return out;
}

std::string Type::str() const {
  if (names.empty()) return "?";
  if (!is_tuple()) return names[0];
  std::string s = "(";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) s += ",";
    s += names[i];
  }
  return s + ")";
}

bool SlotConstraint::admits(const TypeLattice& lattice, std::string_view candidate) const {
  switch (kind) {
    case Kind::AssignableTo: return lattice.assignable(candidate, type);
    case Kind::AssignableFrom: return lattice.assignable(type, candidate);
    case Kind::Exact: return candidate == type;
    case Kind::Comparable: return lattice.assignable(candidate, type) || lattice.assignable(type, candidate);
    case Kind::Ambiguous: return false;
  }
  return false;
}

std::string TypedProgram::function_name(NodeId fn) const {
  if (fn == kNoNode) return "";
  return ast.label(ast.node(fn).children.at(1));
}

const std::vector<FunctionSig>& builtin_functions() {
  static const std::vector<FunctionSig> sigs = [] {
    auto mk = [](std::string name, std::vector<std::string> pn, std::vector<std::string> pt, std::string ret) {
      FunctionSig s;
      s.name = std::move(name);
      s.param_names = std::move(pn);
      s.param_types = std::move(pt);
      s.ret = Type(std::move(ret));
      s.builtin = true;
      return s;
    };
    return std::vector<FunctionSig>{
        mk("len", {"text"}, {"string"}, "int"),
        mk("str", {"value"}, {"int"}, "string"),
        mk("parse", {"text"}, {"string"}, "int"),
        mk("join", {"first", "second"}, {"string", "string"}, "string"),
        mk("combine", {"directory", "name"}, {"string", "string"}, "string"),
        mk("dirName", {"path"}, {"string"}, "string"),
        mk("baseName", {"path"}, {"string"}, "string"),
        mk("trim", {"text"}, {"string"}, "string"),
        mk("upper", {"text"}, {"string"}, "string"),
        mk("exists", {"path"}, {"string"}, "bool"),
        mk("contains", {"text", "part"}, {"string", "string"}, "bool"),
        mk("print", {"text"}, {"string"}, "void"),
        mk("abs", {"value"}, {"int"}, "int"),
        mk("max", {"left", "right"}, {"int", "int"}, "int"),
        mk("min", {"left", "right"}, {"int", "int"}, "int"),
        mk("notNull", {"flag"}, {"bool"}, "void"),
    };
  }();
  return sigs;
}

namespace {

class Checker {
 public:
  Checker(Ast ast, const TypeLattice& base) {
    p_.ast = std::move(ast);
    p_.lattice = base;
  }

  TypedProgram run() {
    const Ast& ast = p_.ast;
    if (ast.root == kNoNode) throw TypeError("empty program", 0);
    for (const auto& b : builtin_functions()) p_.functions.emplace(b.name, b);
    for (NodeId child : ast.node(ast.root).children) {
      if (ast.is_symbol(child, sym::TypeDeclaration)) declare_type(child);
    }
    for (NodeId child : ast.node(ast.root).children) {
      if (ast.is_symbol(child, sym::FunctionDeclaration)) declare_function(child);
    }
    for (NodeId fn : p_.function_nodes) check_function(fn);
    std::sort(occ_.begin(), occ_.end(), [](const Occurrence& a, const Occurrence& b) { return a.token < b.token; });
    p_.occurrences = std::move(occ_);
    for (std::size_t i = 0; i < p_.occurrences.size(); ++i) p_.occurrence_of[p_.occurrences[i].token] = i;
    return std::move(p_);
  }

 private:
  TypedProgram p_;
  std::vector<Occurrence> occ_;
  std::unordered_map<int, std::size_t> occ_index_;
  std::vector<std::map<std::string, VarId, std::less<>>> scopes_;
  std::set<std::string, std::less<>> fn_var_names_;
  NodeId cur_fn_ = kNoNode;
  Type cur_ret_;

  const Ast& ast() const { return p_.ast; }
  std::size_t offset(NodeId n) const {
    auto lv = ast().leaves(n);
    return lv.empty() ? 0 : ast().tokens[static_cast<std::size_t>(lv.front())].span.begin;
  }
  [[noreturn]] void fail(const std::string& msg, NodeId at) const { throw TypeError(msg, offset(at)); }

  void declare_type(NodeId n) {
    const auto& ch = ast().node(n).children;
    std::string name = ast().label(ch[1]);
    std::vector<std::string> supers;
    for (std::size_t i = 3; i + 1 < ch.size(); i += 2) supers.push_back(ast().label(ch[i]));
    p_.lattice.declare(name, supers, offset(n));
  }

  Type resolve_type_ref(NodeId n, bool allow_void) {
    Type t;
    if (ast().node(n).is_leaf()) {
      t = Type(ast().label(n));
    } else {
      const auto& ch = ast().node(n).children;
      for (std::size_t i = 1; i < ch.size(); i += 2) t.names.push_back(ast().label(ch[i]));
    }
    for (const auto& name : t.names) {
      if (!p_.lattice.contains(name)) fail("unknown type '" + name + "'", n);
      if (name == "void" && !(allow_void && !t.is_tuple())) fail("void is not a value type", n);
    }
    return t;
  }

  void declare_function(NodeId n) {
    const auto& ch = ast().node(n).children;
    FunctionSig sig;
    sig.name = ast().label(ch[1]);
    sig.decl = n;
    sig.name_token = ast().node(ch[1]).token;
    if (p_.functions.count(sig.name)) fail("function '" + sig.name + "' redeclared", n);
    for (NodeId c : ast().node(ch[2]).children) {
      if (!ast().is_symbol(c, sym::Parameter)) continue;
      const auto& pc = ast().node(c).children;
      sig.param_names.push_back(ast().label(pc[0]));
      sig.param_tokens.push_back(ast().node(pc[0]).token);
      sig.param_types.push_back(resolve_type_ref(pc[2], false).simple());
    }
    sig.ret = ch.size() == 6 ? resolve_type_ref(ch[4], true) : Type("void");
    p_.functions.emplace(sig.name, sig);
    p_.function_nodes.push_back(n);
  }

  std::vector<VarId> visible() const {
    std::vector<VarId> out;
    for (const auto& s : scopes_)
      for (const auto& [name, id] : s) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
  }

  VarId declare_var(NodeId name_leaf, const std::string& type, bool is_param) {
    const std::string& name = ast().label(name_leaf);
    if (fn_var_names_.count(name)) fail("variable '" + name + "' redeclared", name_leaf);
    fn_var_names_.insert(name);
    Variable v;
    v.id = static_cast<VarId>(p_.vars.size());
    v.name = name;
    v.type = type;
    v.decl_token = ast().node(name_leaf).token;
    v.function = cur_fn_;
    v.is_param = is_param;
    p_.vars.push_back(v);
    Occurrence o;
    o.token = v.decl_token;
    o.var = v.id;
    o.is_write = true;
    o.is_decl = true;
    o.visible = visible();
    add_occurrence(std::move(o));
    scopes_.back().emplace(name, v.id);
    p_.expr_types[name_leaf] = Type(type);
    return v.id;
  }

  void add_occurrence(Occurrence o) {
    occ_index_[o.token] = occ_.size();
    occ_.push_back(std::move(o));
  }

  VarId lookup(NodeId leaf) const {
    const std::string& name = ast().label(leaf);
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    fail("unknown variable '" + name + "'", leaf);
  }

  NodeId strip_parens(NodeId n) const {
    while (ast().is_symbol(n, sym::ParenthesizedExpression)) n = ast().node(n).children[1];
    return n;
  }

  bool is_var_leaf(NodeId n) const {
    return ast().node(n).is_leaf() && ast().token_of(n).kind == TokenKind::Identifier;
  }

  void constrain(NodeId expr, SlotConstraint::Kind kind, const std::string& type) {
    NodeId n = strip_parens(expr);
    if (!is_var_leaf(n)) return;
    auto it = occ_index_.find(ast().node(n).token);
    if (it == occ_index_.end()) return;
    occ_[it->second].constraint = SlotConstraint{kind, type};
  }

  void check_function(NodeId n) {
    const auto& ch = ast().node(n).children;
    cur_fn_ = n;
    const auto& sig = p_.functions.at(ast().label(ch[1]));
    cur_ret_ = sig.ret;
    fn_var_names_.clear();
    scopes_.clear();
    scopes_.emplace_back();
    std::size_t pi = 0;
    for (NodeId c : ast().node(ch[2]).children) {
      if (!ast().is_symbol(c, sym::Parameter)) continue;
      declare_var(ast().node(c).children[0], sig.param_types[pi++], true);
    }
    bool terminates = check_block(ch.back());
    if (!terminates && !cur_ret_.is_void()) fail("missing return in function '" + sig.name + "'", n);
    scopes_.clear();
    cur_fn_ = kNoNode;
  }

  bool check_block(NodeId block) {
    scopes_.emplace_back();
    bool terminated = false;
    for (NodeId s : ast().node(block).children) {
      if (ast().node(s).is_leaf()) continue;  // braces
      if (terminated) fail("unreachable statement", s);
      terminated = check_stmt(s);
    }
    scopes_.pop_back();
    return terminated;
  }

  bool check_body(NodeId body) {
    if (ast().is_symbol(body, sym::Block)) return check_block(body);
    scopes_.emplace_back();
    bool t = check_stmt(body);
    scopes_.pop_back();
    return t;
  }

  void require_assignable(const Type& from, const Type& to, NodeId at) {
    bool ok = from.names.size() == to.names.size();
    for (std::size_t i = 0; ok && i < from.names.size(); ++i) ok = p_.lattice.assignable(from.names[i], to.names[i]);
    if (!ok) fail("cannot assign " + from.str() + " to " + to.str(), at);
  }

  bool check_stmt(NodeId s) {
    const auto& n = ast().node(s);
    const auto& ch = n.children;
    if (n.symbol == sym::VariableDeclaration) {
      std::string type = resolve_type_ref(ch[3], false).simple();
      if (ch.size() == 7) {
        Type t = check_expr(ch[5], Type(type));
        require_assignable(t, Type(type), ch[5]);
      }
      declare_var(ch[1], type, false);
      return false;
    }
    if (n.symbol == sym::AssignmentStatement) {
      std::vector<NodeId> targets;
      if (ast().is_symbol(ch[0], sym::TupleTarget)) {
        const auto& tc = ast().node(ch[0]).children;
        for (std::size_t i = 1; i < tc.size(); i += 2) targets.push_back(tc[i]);
      } else {
        targets.push_back(ch[0]);
      }
      Type target_type;
      std::vector<VarId> ids;
      for (NodeId t : targets) {
        VarId id = lookup(t);
        ids.push_back(id);
        target_type.names.push_back(p_.var(id).type);
      }
      Type rhs = check_expr(ch[2], target_type);
      require_assignable(rhs, target_type, ch[2]);
      for (std::size_t i = 0; i < targets.size(); ++i) {
        Occurrence o;
        o.token = ast().node(targets[i]).token;
        o.var = ids[i];
        o.is_write = true;
        o.constraint = SlotConstraint{SlotConstraint::Kind::AssignableFrom, rhs.names[i]};
        o.visible = visible();
        add_occurrence(std::move(o));
        p_.expr_types[targets[i]] = Type(p_.var(ids[i]).type);
      }
      return false;
    }
    if (n.symbol == sym::IfStatement) {
      Type c = check_expr(ch[2], Type("bool"));
      if (c != Type("bool")) fail("condition must be bool, got " + c.str(), ch[2]);
      bool then_t = check_body(ch[4]);
      bool else_t = false;
      if (ch.size() == 7) else_t = check_body(ch[6]);
      return then_t && else_t;
    }
    if (n.symbol == sym::WhileStatement) {
      Type c = check_expr(ch[2], Type("bool"));
      if (c != Type("bool")) fail("condition must be bool, got " + c.str(), ch[2]);
      check_body(ch[4]);
      return false;
    }
    if (n.symbol == sym::ReturnStatement) {
      if (ch.size() == 3) {
        if (cur_ret_.is_void()) fail("void function returns a value", s);
        Type t = check_expr(ch[1], cur_ret_);
        require_assignable(t, cur_ret_, ch[1]);
      } else if (!cur_ret_.is_void()) {
        fail("missing return value", s);
      }
      return true;
    }
    if (n.symbol == sym::ExpressionStatement) {
      check_expr(ch[0], std::nullopt);
      constrain(ch[0], SlotConstraint::Kind::Ambiguous, "");
      return false;
    }
    fail("unexpected statement " + n.symbol, s);
  }

  Type check_expr(NodeId e, const std::optional<Type>& expected) {
    Type t = check_expr_inner(e, expected);
    p_.expr_types[e] = t;
    return t;
  }

  Type check_expr_inner(NodeId e, const std::optional<Type>& expected) {
    const auto& n = ast().node(e);
    if (n.is_leaf()) {
      const Token& tok = ast().token_of(e);
      if (tok.kind == TokenKind::Literal) {
        if (tok.text == "true" || tok.text == "false") return Type("bool");
        if (tok.text.front() == '"') return Type("string");
        return Type("int");
      }
      if (tok.kind != TokenKind::Identifier) fail("unexpected token '" + tok.text + "'", e);
      VarId id = lookup(e);
      Occurrence o;
      o.token = n.token;
      o.var = id;
      if (expected && !expected->is_tuple())
        o.constraint = SlotConstraint{SlotConstraint::Kind::AssignableTo, expected->simple()};
      o.visible = visible();
      add_occurrence(std::move(o));
      return Type(p_.var(id).type);
    }
    const auto& ch = n.children;
    if (n.symbol == sym::ParenthesizedExpression) return check_expr(ch[1], expected);
    if (n.symbol == sym::TupleExpression) {
      Type t;
      std::size_t idx = 0;
      for (std::size_t i = 1; i < ch.size(); i += 2, ++idx) {
        std::optional<Type> sub;
        if (expected && expected->is_tuple() && idx < expected->names.size()) sub = Type(expected->names[idx]);
        Type et = check_expr(ch[i], sub);
        if (et.is_tuple() || et.is_void()) fail("tuple elements must be simple values", ch[i]);
        t.names.push_back(et.simple());
      }
      return t;
    }
    if (n.symbol == sym::UnaryExpression) {
      const std::string& op = ast().label(ch[0]);
      Type operand = check_expr(ch[1], std::nullopt);
      std::string want = op == "!" ? "bool" : "int";
      if (operand != Type(want)) fail("operator " + op + " expects " + want, ch[1]);
      constrain(ch[1], SlotConstraint::Kind::Exact, want);
      return Type(want);
    }
    if (n.symbol == sym::BinaryExpression) {
      const std::string& op = ast().label(ch[1]);
      Type l = check_expr(ch[0], std::nullopt);
      Type r = check_expr(ch[2], std::nullopt);
      if (l.is_tuple() || r.is_tuple() || l.is_void() || r.is_void())
        fail("operator " + op + " needs simple operands", e);
      if (op == "==" || op == "!=") {
        if (!(p_.lattice.assignable(l.simple(), r.simple()) || p_.lattice.assignable(r.simple(), l.simple())))
          fail("cannot compare " + l.str() + " with " + r.str(), e);
        constrain(ch[0], SlotConstraint::Kind::Comparable, r.simple());
        constrain(ch[2], SlotConstraint::Kind::Comparable, l.simple());
        return Type("bool");
      }
      std::string operand;
      std::string result;
      if (op == "&&" || op == "||") {
        operand = "bool";
        result = "bool";
      } else if (op == "<" || op == "<=" || op == ">" || op == ">=") {
        operand = "int";
        result = "bool";
      } else if (op == "+" && l == Type("string")) {
        operand = "string";
        result = "string";
      } else {
        operand = "int";
        result = "int";
      }
      if (l != Type(operand) || r != Type(operand))
        fail("operator " + op + " cannot combine " + l.str() + " and " + r.str(), e);
      constrain(ch[0], SlotConstraint::Kind::Exact, operand);
      constrain(ch[2], SlotConstraint::Kind::Exact, operand);
      return Type(result);
    }
    if (n.symbol == sym::InvocationExpression) {
      const std::string& name = ast().label(ch[0]);
      auto it = p_.functions.find(name);
      if (it == p_.functions.end()) fail("unknown function '" + name + "'", e);
      const FunctionSig& sig = it->second;
      std::vector<NodeId> args;
      for (NodeId c : ast().node(ch[1]).children)
        if (!ast().node(c).is_leaf() || (ast().token_of(c).kind != TokenKind::Punct)) args.push_back(c);
      if (args.size() != sig.param_types.size())
        fail("function '" + name + "' expects " + std::to_string(sig.param_types.size()) + " arguments, got " +
                 std::to_string(args.size()),
             e);
      for (std::size_t i = 0; i < args.size(); ++i) {
        Type at = check_expr(args[i], Type(sig.param_types[i]));
        require_assignable(at, Type(sig.param_types[i]), args[i]);
      }
      p_.callee_of[e] = name;
      return sig.ret;
    }
    fail("unexpected expression " + n.symbol, e);
  }
};

}  // namespace

TypedProgram typecheck(Ast ast, const TypeLattice& base) { return Checker(std::move(ast), base).run(); }

TypedProgram compile(std::string_view source, int file_id) { return typecheck(parse(tokenize(source, file_id))); }

std::vector<std::pair<VarId, std::string>> vars_in_scope(const TypedProgram& prog, int token) {
  std::vector<std::pair<VarId, std::string>> out;
  const Occurrence* occ = prog.occurrence(token);
  if (!occ || occ->is_decl || occ->constraint.kind == SlotConstraint::Kind::Ambiguous) return out;
  for (VarId v : occ->visible) {
    const auto& var = prog.var(v);
    if (occ->constraint.admits(prog.lattice, var.type)) out.emplace_back(v, var.type);
  }
  return out;
}

}  // namespace mlpg::lang
