#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mlpg/lang/ast.hpp"

namespace mlpg::lang {

class TypeError : public std::runtime_error {
 public:
  TypeError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Nominal types with declared supertypes. Builtins are int, bool, string, void.
class TypeLattice {
 public:
  TypeLattice();

  /// Throws TypeError on redeclaration, unknown supertype or a cycle.
  void declare(const std::string& name, const std::vector<std::string>& supertypes, std::size_t offset = 0);

  bool contains(std::string_view name) const;
  bool is_builtin(std::string_view name) const;
  const std::vector<std::string>& direct_supertypes(std::string_view name) const;

  /// The type itself followed by all transitive supertypes (sorted).
  std::vector<std::string> closure(std::string_view name) const;

  /// `from` is assignable to `to` iff `to` is in closure(from).
  bool assignable(std::string_view from, std::string_view to) const;

  std::vector<std::string> user_types() const;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> supers_;
  std::vector<std::string> order_;
};

/// Simple types have one name, tuple types several.
struct Type {
  std::vector<std::string> names;

  Type() = default;
  explicit Type(std::string name) : names{std::move(name)} {}

  bool is_tuple() const { return names.size() > 1; }
  bool is_void() const { return names.size() == 1 && names[0] == "void"; }
  const std::string& simple() const { return names.at(0); }
  std::string str() const;
  friend bool operator==(const Type&, const Type&) = default;
};

using VarId = int;
inline constexpr VarId kNoVar = -1;

struct Variable {
  VarId id = kNoVar;
  std::string name;
  std::string type;
  int decl_token = -1;
  NodeId function = kNoNode;
  bool is_param = false;

  /// Stable textual id used in graph files, e.g. "main:total".
  std::string qualified(const std::string& function_name) const { return function_name + ":" + name; }
};

struct FunctionSig {
  std::string name;
  std::vector<std::string> param_names;
  std::vector<std::string> param_types;
  std::vector<int> param_tokens;  // formal-parameter name tokens, empty for builtins
  Type ret;
  NodeId decl = kNoNode;
  int name_token = -1;
  bool builtin = false;
};

/// What a variable occurrence must satisfy for a substitute to typecheck.
struct SlotConstraint {
  enum class Kind {
    AssignableTo,    // substitute type assignable to `type` (reads)
    AssignableFrom,  // `type` assignable to substitute (writes)
    Exact,           // operator operands
    Comparable,      // ==, != operands
    Ambiguous,       // bare expression statements; never a slot
  };
  Kind kind = Kind::Ambiguous;
  std::string type;

  bool admits(const TypeLattice& lattice, std::string_view candidate) const;
};

/// A variable token in a function body or parameter list.
struct Occurrence {
  int token = -1;
  VarId var = kNoVar;
  bool is_write = false;
  bool is_decl = false;
  SlotConstraint constraint;
  std::vector<VarId> visible;  // variables in scope at this point, declaration order
};

struct TypedProgram {
  Ast ast;
  TypeLattice lattice;
  std::vector<Variable> vars;
  std::vector<Occurrence> occurrences;              // in token order
  std::unordered_map<int, std::size_t> occurrence_of;  // token -> index into occurrences
  std::map<std::string, FunctionSig, std::less<>> functions;
  std::vector<NodeId> function_nodes;                // user functions in source order
  std::unordered_map<NodeId, Type> expr_types;
  std::unordered_map<NodeId, std::string> callee_of;  // InvocationExpression -> function name

  const Variable& var(VarId id) const { return vars.at(static_cast<std::size_t>(id)); }
  const Occurrence* occurrence(int token) const {
    auto it = occurrence_of.find(token);
    return it == occurrence_of.end() ? nullptr : &occurrences[it->second];
  }
  std::string function_name(NodeId fn) const;
  std::string qualified_var(VarId id) const { return var(id).qualified(function_name(var(id).function)); }
};

/// Builtin library functions available to every program.
const std::vector<FunctionSig>& builtin_functions();

/// Type checks `ast`; type declarations in the program extend `base`.
TypedProgram typecheck(Ast ast, const TypeLattice& base = TypeLattice());

/// tokenize + parse + typecheck.
TypedProgram compile(std::string_view source, int file_id = 0);

/// Variables visible at `token` whose type satisfies the occurrence's constraint.
/// Empty when the token is not a usage occurrence (or its context is ambiguous).
std::vector<std::pair<VarId, std::string>> vars_in_scope(const TypedProgram& prog, int token);

}  // namespace mlpg::lang
