#include <gtest/gtest.h>

#include <algorithm>

#include "mlpg/lang/cfg.hpp"
#include "mlpg/lang/lexer.hpp"
#include "mlpg/lang/typecheck.hpp"

using namespace mlpg::lang;

namespace {

std::vector<std::string> texts(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.text);
  return out;
}

std::set<std::string> names_in_scope(const TypedProgram& p, int token) {
  std::set<std::string> out;
  for (auto [v, type] : vars_in_scope(p, token)) out.insert(p.var(v).name);
  return out;
}

int nth_token(const TypedProgram& p, const std::string& text, int n) {
  for (std::size_t i = 0; i < p.ast.tokens.size(); ++i)
    if (p.ast.tokens[i].text == text && n-- == 0) return static_cast<int>(i);
  return -1;
}

NodeId find_symbol(const Ast& ast, std::string_view s) {
  for (const auto& n : ast.nodes)
    if (ast.is_symbol(n.id, s)) return n.id;
  return kNoNode;
}

}  // namespace

TEST(Lexer, EmptySourceHasNoTokens) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Lexer, SplitsStatement) {
  auto toks = tokenize("var x: int = 1;");
  EXPECT_EQ(texts(toks), (std::vector<std::string>{"var", "x", ":", "int", "=", "1", ";"}));
  EXPECT_EQ(toks[0].kind, TokenKind::Keyword);
  EXPECT_EQ(toks[1].kind, TokenKind::Identifier);
  EXPECT_EQ(toks[5].kind, TokenKind::Literal);
}

TEST(Lexer, SkipsCommentsAndKeepsOffsets) {
  auto toks = tokenize("a // note\n  >= \"s\\\"q\"");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[1].text, ">=");
  EXPECT_EQ(toks[1].span.begin, 12u);
  EXPECT_EQ(toks[2].kind, TokenKind::Literal);
}

TEST(Lexer, IllegalCharacterReportsOffset) {
  try {
    tokenize("var a@");
    FAIL();
  } catch (const LexError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
}

TEST(Lexer, UnterminatedString) { EXPECT_THROW(tokenize("x = \"abc"), LexError); }

TEST(Lexer, VariableTokensOfLoopExample) {
  auto toks = tokenize("(x, y) = Foo(); while (x > 0) x = x + y;");
  std::vector<std::string> vars;
  for (const auto& t : toks)
    if (t.kind == TokenKind::Identifier && t.text != "Foo") vars.push_back(t.text);
  EXPECT_EQ(vars, (std::vector<std::string>{"x", "y", "x", "x", "x", "y"}));
}

TEST(Parser, EmptyFunction) {
  auto ast = parse(tokenize("fn f() {}"));
  const auto& prog = ast.node(ast.root);
  ASSERT_EQ(prog.children.size(), 1u);
  NodeId fn = prog.children[0];
  EXPECT_TRUE(ast.is_symbol(fn, sym::FunctionDeclaration));
  NodeId body = ast.node(fn).children.back();
  EXPECT_TRUE(ast.is_symbol(body, sym::Block));
  EXPECT_EQ(ast.node(body).children.size(), 2u);  // just the braces
}

TEST(Parser, CallStatementShape) {
  auto ast = parse(tokenize("fn f(x: string) { notNull(x); }"));
  NodeId stmt = find_symbol(ast, sym::ExpressionStatement);
  ASSERT_NE(stmt, kNoNode);
  NodeId call = ast.node(stmt).children[0];
  ASSERT_TRUE(ast.is_symbol(call, sym::InvocationExpression));
  const auto& ch = ast.node(call).children;
  ASSERT_EQ(ch.size(), 2u);
  EXPECT_TRUE(ast.is_token(ch[0], "notNull"));
  EXPECT_TRUE(ast.is_symbol(ch[1], sym::ArgumentList));
}

TEST(Parser, LeavesAreExactlyTokens) {
  auto ast = parse(tokenize("fn g(a: int) -> int { var b: int = a * (a + 1); if (b > 2) return b; else return -a; }"));
  auto leaves = ast.leaves(ast.root);
  ASSERT_EQ(leaves.size(), ast.tokens.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) EXPECT_EQ(leaves[i], static_cast<int>(i));
}

TEST(Parser, ErrorAtUnexpectedBrace) {
  try {
    parse(tokenize("fn f( {"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.token_index(), 3u);
    EXPECT_EQ(e.offset(), 6u);
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(Parser, PrettyPrintRoundTrip) {
  const char* src =
      "type Animal;type Cat extends Animal;\n"
      "fn sz(p: string)->int{var n:int=len(p);while(n>0&&!(n==3)){n=n-1;}return -n;}\n"
      "fn pair() -> (int, int) { return (1, 2); }\n"
      "fn main() { var a: int; var b: int; (a, b) = pair(); if (a < b) print(str(a)); }";
  auto ast = parse(tokenize(src));
  auto printed = pretty_print(ast);
  auto again = parse(tokenize(printed));
  EXPECT_TRUE(structurally_equal(ast, again));
  EXPECT_EQ(pretty_print(again), printed);
}

TEST(Typecheck, ScopeWithParams) {
  auto p = compile("fn f(p: int, q: int) -> int { return p + 1; }");
  int slot = nth_token(p, "p", 1);
  EXPECT_EQ(names_in_scope(p, slot), (std::set<std::string>{"p", "q"}));
}

TEST(Typecheck, ScopeFiltersBySubtyping) {
  auto p = compile(
      "type Animal; type Cat extends Animal; type Dog extends Animal;\n"
      "fn feed(a: Animal) {}\n"
      "fn main(c: Cat, d: Dog, n: int) { feed(c); }");
  int slot = nth_token(p, "c", 1);
  EXPECT_EQ(names_in_scope(p, slot), (std::set<std::string>{"c", "d"}));
  // Oracle: enumerate visible variables and keep the ones the lattice accepts.
  std::set<std::string> oracle;
  for (std::string name : {"c", "d", "n"}) {
    std::string type = name == "c" ? "Cat" : name == "d" ? "Dog" : "int";
    auto closure = p.lattice.closure(type);
    if (std::find(closure.begin(), closure.end(), "Animal") != closure.end()) oracle.insert(name);
  }
  EXPECT_EQ(names_in_scope(p, slot), oracle);
}

TEST(Typecheck, DeclarationExcludedFromItsOwnInitializer) {
  auto p = compile("fn f(a: int) { var b: int = a; print(str(b)); }");
  EXPECT_EQ(names_in_scope(p, nth_token(p, "a", 1)), (std::set<std::string>{"a"}));
  EXPECT_TRUE(vars_in_scope(p, nth_token(p, "b", 0)).empty());
}

TEST(Typecheck, Errors) {
  EXPECT_THROW(compile("fn f() { x = 1; }"), TypeError);
  EXPECT_THROW(compile("fn f() { var x: int = \"s\"; }"), TypeError);
  EXPECT_THROW(compile("fn f() -> int { }"), TypeError);
  EXPECT_THROW(compile("fn f() { var x: int; var x: int; }"), TypeError);
  EXPECT_THROW(compile("type A extends B;"), TypeError);
  EXPECT_THROW(compile("fn f() { return; print(\"x\"); }"), TypeError);
  EXPECT_NO_THROW(compile("type A; type B extends A; fn f(b: B) -> A { return b; }"));
}

TEST(Typecheck, ClosureListsSelfFirst) {
  auto p = compile("type A; type B extends A; type C extends B;");
  EXPECT_EQ(p.lattice.closure("C"), (std::vector<std::string>{"C", "A", "B"}));
  EXPECT_TRUE(p.lattice.assignable("C", "A"));
  EXPECT_FALSE(p.lattice.assignable("A", "C"));
}

TEST(Cfg, StraightLineIsOneBlock) {
  auto p = compile("fn f() { var a: int = 1; var b: int = a; print(str(b)); }");
  auto cfg = build_cfg(p, p.function_nodes[0]);
  EXPECT_EQ(cfg.size(), 1u);
  EXPECT_EQ(cfg.blocks[0].items.size(), 4u);  // parameters + 3 statements
}

TEST(Cfg, WhileHasBackEdge) {
  auto p = compile("fn f(n: int) { while (n > 0) n = n - 1; }");
  auto cfg = build_cfg(p, p.function_nodes[0]);
  EXPECT_EQ(cfg.size(), 4u);
  ASSERT_EQ(cfg.back_edges.size(), 1u);
  EXPECT_EQ(cfg.back_edges[0], std::make_pair(2, 1));
  EXPECT_EQ(cfg.exit, 3);
}

TEST(Cfg, ReturningBranchesHaveNoMerge) {
  auto p = compile("fn f(n: int) -> int { if (n > 0) { return 1; } else { return 2; } }");
  auto cfg = build_cfg(p, p.function_nodes[0]);
  EXPECT_EQ(cfg.size(), 3u);
  EXPECT_EQ(cfg.exit, -1);
}
