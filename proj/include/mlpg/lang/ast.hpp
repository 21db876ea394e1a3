#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mlpg/lang/lexer.hpp"

namespace mlpg::lang {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

/// Nonterminal names used to label interior AST nodes.
namespace sym {
inline constexpr std::string_view Program = "Program";
inline constexpr std::string_view TypeDeclaration = "TypeDeclaration";
inline constexpr std::string_view FunctionDeclaration = "FunctionDeclaration";
inline constexpr std::string_view ParameterList = "ParameterList";
inline constexpr std::string_view Parameter = "Parameter";
inline constexpr std::string_view TupleType = "TupleType";
inline constexpr std::string_view Block = "Block";
inline constexpr std::string_view VariableDeclaration = "VariableDeclaration";
inline constexpr std::string_view AssignmentStatement = "AssignmentStatement";
inline constexpr std::string_view TupleTarget = "TupleTarget";
inline constexpr std::string_view IfStatement = "IfStatement";
inline constexpr std::string_view WhileStatement = "WhileStatement";
inline constexpr std::string_view ReturnStatement = "ReturnStatement";
inline constexpr std::string_view ExpressionStatement = "ExpressionStatement";
inline constexpr std::string_view InvocationExpression = "InvocationExpression";
inline constexpr std::string_view ArgumentList = "ArgumentList";
inline constexpr std::string_view BinaryExpression = "BinaryExpression";
inline constexpr std::string_view UnaryExpression = "UnaryExpression";
inline constexpr std::string_view ParenthesizedExpression = "ParenthesizedExpression";
inline constexpr std::string_view TupleExpression = "TupleExpression";
}  // namespace sym

struct AstNode {
  NodeId id = kNoNode;
  std::string symbol;  // empty for token leaves
  std::vector<NodeId> children;
  int token = -1;  // index into Ast::tokens, set iff leaf
  NodeId parent = kNoNode;

  bool is_leaf() const { return token >= 0; }
};

/// Arena-allocated syntax tree. Leaves are exactly the tokens, in order.
struct Ast {
  std::vector<Token> tokens;
  std::vector<AstNode> nodes;
  std::vector<NodeId> token_node;  // token index -> leaf node
  NodeId root = kNoNode;

  const AstNode& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  const Token& token_of(NodeId id) const { return tokens.at(static_cast<std::size_t>(node(id).token)); }
  bool is_symbol(NodeId id, std::string_view s) const { return !node(id).is_leaf() && node(id).symbol == s; }
  bool is_token(NodeId id, std::string_view text) const {
    return node(id).is_leaf() && token_of(id).text == text;
  }

  /// Nonterminal name for interior nodes, token text for leaves.
  const std::string& label(NodeId id) const {
    const auto& n = node(id);
    return n.is_leaf() ? tokens[static_cast<std::size_t>(n.token)].text : n.symbol;
  }

  /// Token indices under `id`, in source order.
  std::vector<int> leaves(NodeId id) const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::vector<std::string> expected, std::size_t token_index,
             std::size_t offset);

  const std::vector<std::string>& expected() const { return expected_; }
  std::size_t token_index() const { return token_index_; }
  std::size_t offset() const { return offset_; }

 private:
  std::vector<std::string> expected_;
  std::size_t token_index_;
  std::size_t offset_;
};

Ast parse(std::vector<Token> tokens);

/// Canonical formatting: one statement per line, two-space indent, single
/// spaces between tokens except around `( ) , ; :`.
std::string pretty_print(const Ast& ast);

/// Same shape, same nonterminals, same token texts.
bool structurally_equal(const Ast& a, const Ast& b);

}  // namespace mlpg::lang
