#include <algorithm>
#include <functional>
#include <sstream>
#include <utility>

#include "mlpg/lang/ast.hpp"

namespace mlpg::lang {

std::vector<int> Ast::leaves(NodeId id) const {
  std::vector<int> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    const auto& n = node(cur);
    if (n.is_leaf()) {
      out.push_back(n.token);
      continue;
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

namespace {

std::string join(const std::vector<std::string>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += xs[i];
  }
  return s;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) {
    ast_.tokens = std::move(tokens);
    ast_.token_node.assign(ast_.tokens.size(), kNoNode);
  }

  Ast run() {
    NodeId root = make(sym::Program);
    while (peek_is(TokenKind::Keyword, "type")) add(root, type_decl());
    while (!at_end()) {
      if (!peek_is(TokenKind::Keyword, "fn")) fail({"'fn'", "end of input"});
      add(root, fn_decl());
    }
    ast_.root = root;
    return std::move(ast_);
  }

 private:
  Ast ast_;
  std::size_t pos_ = 0;

  bool at_end() const { return pos_ >= ast_.tokens.size(); }
  const Token* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < ast_.tokens.size() ? &ast_.tokens[pos_ + ahead] : nullptr;
  }
  bool peek_is(TokenKind k, std::string_view text, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->is(k, text);
  }
  bool peek_kind(TokenKind k, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->kind == k;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::ostringstream msg;
    std::size_t offset = 0;
    if (at_end()) {
      offset = ast_.tokens.empty() ? 0 : ast_.tokens.back().span.end;
      msg << "unexpected end of input";
    } else {
      offset = ast_.tokens[pos_].span.begin;
      msg << "unexpected '" << ast_.tokens[pos_].text << "'";
    }
    msg << " at byte " << offset << ", expected " << join(expected);
    throw ParseError(msg.str(), std::move(expected), pos_, offset);
  }

  NodeId make(std::string_view symbol) {
    AstNode n;
    n.id = static_cast<NodeId>(ast_.nodes.size());
    n.symbol = std::string(symbol);
    ast_.nodes.push_back(std::move(n));
    return ast_.nodes.back().id;
  }

  void add(NodeId parent, NodeId child) {
    ast_.nodes[static_cast<std::size_t>(child)].parent = parent;
    ast_.nodes[static_cast<std::size_t>(parent)].children.push_back(child);
  }

  NodeId leaf() {
    AstNode n;
    n.id = static_cast<NodeId>(ast_.nodes.size());
    n.token = static_cast<int>(pos_);
    ast_.token_node[pos_] = n.id;
    ast_.nodes.push_back(std::move(n));
    ++pos_;
    return ast_.nodes.back().id;
  }

  NodeId expect(TokenKind k, std::string_view text) {
    if (!peek_is(k, text)) fail({"'" + std::string(text) + "'"});
    return leaf();
  }

  NodeId expect_name() {
    if (!peek_kind(TokenKind::Identifier)) fail({"identifier"});
    return leaf();
  }

  NodeId type_decl() {
    NodeId n = make(sym::TypeDeclaration);
    add(n, expect(TokenKind::Keyword, "type"));
    add(n, expect_name());
    if (peek_is(TokenKind::Keyword, "extends")) {
      add(n, leaf());
      add(n, expect_name());
      while (peek_is(TokenKind::Punct, ",")) {
        add(n, leaf());
        add(n, expect_name());
      }
    }
    if (!peek_is(TokenKind::Punct, ";")) fail({"'extends'", "','", "';'"});
    add(n, leaf());
    return n;
  }

  NodeId type_ref() {
    if (peek_is(TokenKind::Punct, "(")) {
      NodeId t = make(sym::TupleType);
      add(t, leaf());
      add(t, expect_name());
      do {
        add(t, expect(TokenKind::Punct, ","));
        add(t, expect_name());
      } while (peek_is(TokenKind::Punct, ","));
      add(t, expect(TokenKind::Punct, ")"));
      return t;
    }
    return expect_name();
  }

  NodeId fn_decl() {
    NodeId n = make(sym::FunctionDeclaration);
    add(n, expect(TokenKind::Keyword, "fn"));
    add(n, expect_name());
    NodeId params = make(sym::ParameterList);
    add(n, params);
    add(params, expect(TokenKind::Punct, "("));
    if (!peek_is(TokenKind::Punct, ")")) {
      while (true) {
        NodeId p = make(sym::Parameter);
        add(params, p);
        add(p, expect_name());
        add(p, expect(TokenKind::Punct, ":"));
        add(p, expect_name());
        if (peek_is(TokenKind::Punct, ",")) {
          add(params, leaf());
          continue;
        }
        break;
      }
    }
    if (!peek_is(TokenKind::Punct, ")")) fail({"','", "')'"});
    add(params, leaf());
    if (peek_is(TokenKind::Punct, "->")) {
      add(n, leaf());
      add(n, type_ref());
    }
    if (!peek_is(TokenKind::Punct, "{")) fail({"'->'", "'{'"});
    add(n, block());
    return n;
  }

  NodeId block() {
    NodeId b = make(sym::Block);
    add(b, expect(TokenKind::Punct, "{"));
    while (!peek_is(TokenKind::Punct, "}")) {
      if (at_end()) fail({"statement", "'}'"});
      add(b, statement());
    }
    add(b, leaf());
    return b;
  }

  NodeId body() { return peek_is(TokenKind::Punct, "{") ? block() : statement(); }

  bool tuple_target_ahead() const {
    if (!peek_is(TokenKind::Punct, "(")) return false;
    std::size_t k = 1;
    if (!peek_kind(TokenKind::Identifier, k)) return false;
    ++k;
    bool saw_comma = false;
    while (peek_is(TokenKind::Punct, ",", k)) {
      if (!peek_kind(TokenKind::Identifier, k + 1)) return false;
      k += 2;
      saw_comma = true;
    }
    return saw_comma && peek_is(TokenKind::Punct, ")", k) && peek_is(TokenKind::Operator, "=", k + 1);
  }

  NodeId statement() {
    const Token* t = peek();
    if (!t) fail({"statement"});
    if (t->is(TokenKind::Keyword, "var")) {
      NodeId n = make(sym::VariableDeclaration);
      add(n, leaf());
      add(n, expect_name());
      add(n, expect(TokenKind::Punct, ":"));
      add(n, expect_name());
      if (peek_is(TokenKind::Operator, "=")) {
        add(n, leaf());
        add(n, expression());
      }
      if (!peek_is(TokenKind::Punct, ";")) fail({"'='", "';'"});
      add(n, leaf());
      return n;
    }
    if (t->is(TokenKind::Keyword, "if")) {
      NodeId n = make(sym::IfStatement);
      add(n, leaf());
      add(n, expect(TokenKind::Punct, "("));
      add(n, expression());
      add(n, expect(TokenKind::Punct, ")"));
      add(n, body());
      if (peek_is(TokenKind::Keyword, "else")) {
        add(n, leaf());
        add(n, body());
      }
      return n;
    }
    if (t->is(TokenKind::Keyword, "while")) {
      NodeId n = make(sym::WhileStatement);
      add(n, leaf());
      add(n, expect(TokenKind::Punct, "("));
      add(n, expression());
      add(n, expect(TokenKind::Punct, ")"));
      add(n, body());
      return n;
    }
    if (t->is(TokenKind::Keyword, "return")) {
      NodeId n = make(sym::ReturnStatement);
      add(n, leaf());
      if (!peek_is(TokenKind::Punct, ";")) add(n, expression());
      add(n, expect(TokenKind::Punct, ";"));
      return n;
    }
    if (tuple_target_ahead()) {
      NodeId n = make(sym::AssignmentStatement);
      NodeId target = make(sym::TupleTarget);
      add(n, target);
      add(target, leaf());
      add(target, expect_name());
      while (peek_is(TokenKind::Punct, ",")) {
        add(target, leaf());
        add(target, expect_name());
      }
      add(target, expect(TokenKind::Punct, ")"));
      add(n, expect(TokenKind::Operator, "="));
      add(n, expression());
      add(n, expect(TokenKind::Punct, ";"));
      return n;
    }
    if (t->kind == TokenKind::Identifier && peek_is(TokenKind::Operator, "=", 1)) {
      NodeId n = make(sym::AssignmentStatement);
      add(n, leaf());
      add(n, leaf());
      add(n, expression());
      add(n, expect(TokenKind::Punct, ";"));
      return n;
    }
    NodeId n = make(sym::ExpressionStatement);
    add(n, expression());
    add(n, expect(TokenKind::Punct, ";"));
    return n;
  }

  NodeId expression() { return binary(0); }

  static int precedence(const Token& t) {
    if (t.kind != TokenKind::Operator) return -1;
    const auto& s = t.text;
    if (s == "||") return 0;
    if (s == "&&") return 1;
    if (s == "==" || s == "!=") return 2;
    if (s == "<" || s == "<=" || s == ">" || s == ">=") return 3;
    if (s == "+" || s == "-") return 4;
    if (s == "*" || s == "/" || s == "%") return 5;
    return -1;
  }

  NodeId binary(int min_prec) {
    NodeId lhs = unary();
    while (const Token* t = peek()) {
      int p = precedence(*t);
      if (p < min_prec) break;
      NodeId n = make(sym::BinaryExpression);
      add(n, lhs);
      add(n, leaf());
      add(n, binary(p + 1));
      lhs = n;
    }
    return lhs;
  }

  NodeId unary() {
    if (peek_is(TokenKind::Operator, "!") || peek_is(TokenKind::Operator, "-")) {
      NodeId n = make(sym::UnaryExpression);
      add(n, leaf());
      add(n, unary());
      return n;
    }
    return primary();
  }

  NodeId primary() {
    const Token* t = peek();
    if (!t) fail({"expression"});
    if (t->kind == TokenKind::Literal) return leaf();
    if (t->kind == TokenKind::Identifier) {
      if (peek_is(TokenKind::Punct, "(", 1)) {
        NodeId call = make(sym::InvocationExpression);
        add(call, leaf());
        NodeId args = make(sym::ArgumentList);
        add(call, args);
        add(args, leaf());
        if (!peek_is(TokenKind::Punct, ")")) {
          add(args, expression());
          while (peek_is(TokenKind::Punct, ",")) {
            add(args, leaf());
            add(args, expression());
          }
        }
        if (!peek_is(TokenKind::Punct, ")")) fail({"','", "')'"});
        add(args, leaf());
        return call;
      }
      return leaf();
    }
    if (t->is(TokenKind::Punct, "(")) {
      NodeId open = leaf();
      NodeId first = expression();
      if (peek_is(TokenKind::Punct, ",")) {
        NodeId tup = make(sym::TupleExpression);
        add(tup, open);
        add(tup, first);
        while (peek_is(TokenKind::Punct, ",")) {
          add(tup, leaf());
          add(tup, expression());
        }
        add(tup, expect(TokenKind::Punct, ")"));
        return tup;
      }
      NodeId paren = make(sym::ParenthesizedExpression);
      add(paren, open);
      add(paren, first);
      if (!peek_is(TokenKind::Punct, ")")) fail({"operator", "','", "')'"});
      add(paren, leaf());
      return paren;
    }
    fail({"expression"});
  }
};

bool no_space_before(const Token& t) {
  return t.is(TokenKind::Punct, ";") || t.is(TokenKind::Punct, ",") || t.is(TokenKind::Punct, ")") ||
         t.is(TokenKind::Punct, ":");
}

}  // namespace

ParseError::ParseError(const std::string& what, std::vector<std::string> expected, std::size_t token_index,
                       std::size_t offset)
    : std::runtime_error(what), expected_(std::move(expected)), token_index_(token_index), offset_(offset) {}

Ast parse(std::vector<Token> tokens) { return Parser(std::move(tokens)).run(); }

std::string pretty_print(const Ast& ast) {
  std::string out;
  int indent = 0;
  bool line_start = true;
  int paren_depth = 0;
  const auto& toks = ast.tokens;

  auto newline = [&] {
    out += '\n';
    line_start = true;
  };

  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Token& t = toks[i];
    const Token* prev = i ? &toks[i - 1] : nullptr;
    if (t.is(TokenKind::Punct, "}")) {
      --indent;
      if (!line_start) newline();
    }
    if (line_start) {
      out.append(static_cast<std::size_t>(std::max(indent, 0)) * 2, ' ');
      line_start = false;
    } else if (prev) {
      bool unary_prev = prev->is(TokenKind::Operator, "!");
      if (prev->is(TokenKind::Operator, "-")) {
        const Token* pp = i >= 2 ? &toks[i - 2] : nullptr;
        unary_prev = !pp || !(pp->kind == TokenKind::Identifier || pp->kind == TokenKind::Literal ||
                              pp->is(TokenKind::Punct, ")"));
      }
      bool tight = no_space_before(t) || prev->is(TokenKind::Punct, "(") || unary_prev ||
                   (t.is(TokenKind::Punct, "(") && prev->kind == TokenKind::Identifier);
      if (!tight) out += ' ';
    }
    out += t.text;
    if (t.is(TokenKind::Punct, "(")) ++paren_depth;
    if (t.is(TokenKind::Punct, ")")) --paren_depth;
    const Token* next = i + 1 < toks.size() ? &toks[i + 1] : nullptr;
    if (t.is(TokenKind::Punct, "{")) {
      ++indent;
      newline();
    } else if (t.is(TokenKind::Punct, ";") && paren_depth == 0) {
      newline();
    } else if (t.is(TokenKind::Punct, "}")) {
      if (next && next->is(TokenKind::Keyword, "else")) continue;
      newline();
      if (indent == 0 && next) newline();
    }
  }
  if (!line_start) out += '\n';
  return out;
}

bool structurally_equal(const Ast& a, const Ast& b) {
  std::function<bool(NodeId, NodeId)> eq = [&](NodeId x, NodeId y) {
    const auto& nx = a.node(x);
    const auto& ny = b.node(y);
    if (nx.is_leaf() != ny.is_leaf()) return false;
    if (nx.is_leaf()) return a.token_of(x).text == b.token_of(y).text && a.token_of(x).kind == b.token_of(y).kind;
    if (nx.symbol != ny.symbol || nx.children.size() != ny.children.size()) return false;
    for (std::size_t i = 0; i < nx.children.size(); ++i)
      if (!eq(nx.children[i], ny.children[i])) return false;
    return true;
  };
  if (a.root == kNoNode || b.root == kNoNode) return a.root == b.root;
  return eq(a.root, b.root);
}

}  // namespace mlpg::lang
