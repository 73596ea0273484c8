#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kepal/formula.hpp"
#include "kepal/util.hpp"

namespace kepal::ast {

// ---------------------------------------------------------------- expressions

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind : std::uint8_t { Lit, Var, Bin };
  enum class Op : std::uint8_t { Add, Sub, Mul, Mod };

  Kind kind;
  std::int64_t lit = 0;
  std::string var;
  Op op = Op::Add;
  Expr l, r;
};

Expr mk_lit(std::int64_t v);
Expr mk_var(std::string name);
Expr mk_bin(ExprNode::Op op, Expr l, Expr r);

using Env = std::map<std::string, std::int64_t>;

/// Standard integer arithmetic; mod is the non-negative remainder.
/// Throws SpecError on unbound variables and mod 0.
std::int64_t eval_expr(const Expr& e, const Env& env);

// ------------------------------------------------------------------- formulas

/// A proposition reference before flattening: family name plus index
/// expressions (empty for unindexed propositions).
struct PropRef {
  std::string name;
  std::vector<Expr> indices;
};

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

/// Syntax-level epistemic formula: indices and agent positions may still
/// contain variables, and formula variables bound by input actions may
/// occur. Or/Imp are parse-level sugar kept through printing; grounding
/// desugars them to Not/And.
struct FormulaNode {
  enum class Kind : std::uint8_t { True, Prop, FVar, Not, And, Or, Imp, Know };

  Kind kind;
  PropRef prop;       // Prop
  std::string fvar;   // FVar
  Expr agent;         // Know
  Formula a, b;
};

Formula mk_true();
Formula mk_prop(PropRef p);
Formula mk_fvar(std::string name);
Formula mk_not(Formula f);
Formula mk_and(Formula a, Formula b);
Formula mk_or(Formula a, Formula b);
Formula mk_imp(Formula a, Formula b);
Formula mk_know(Expr agent, Formula f);

// -------------------------------------------------------------------- actions

struct Action {
  enum class Kind : std::uint8_t { Internal, Input, Output, Set };

  Kind kind = Kind::Internal;
  std::string name;              // internal name or channel
  std::vector<Expr> indices;     // channel/name index expressions
  std::string bind_y, bind_f;    // Input binders; empty means wildcard `_`
  Expr dest;                     // Output destination
  Formula payload;               // Output payload
  PropRef target;                // Set target proposition
  Expr value;                    // Set value expression (must yield 0 or 1)
};

// ---------------------------------------------------------------- constraints

struct ConstraintNode;
using Constraint = std::shared_ptr<const ConstraintNode>;

struct ConstraintNode {
  enum class Kind : std::uint8_t { True, Ne, Lt, In, And, Or, Not };

  Kind kind;
  Expr l, r;                  // Ne / Lt
  std::vector<Expr> set;      // In
  bool negated = false;       // In: `notin`
  Constraint a, b;
};

Constraint mk_ctrue();
Constraint mk_cmp(ConstraintNode::Kind k, Expr l, Expr r);
Constraint mk_in(Expr l, std::vector<Expr> set, bool negated);
Constraint mk_cand(Constraint a, Constraint b);
Constraint mk_cor(Constraint a, Constraint b);
Constraint mk_cnot(Constraint a);

bool eval_constraint(const Constraint& c, const Env& env);

// ---------------------------------------------------------------------- terms

struct TermNode;
using Term = std::shared_ptr<const TermNode>;

struct Summand;

struct TermNode {
  enum class Kind : std::uint8_t { Nil, Sum, Call };

  Kind kind = Kind::Nil;
  std::vector<Summand> summands;  // Sum
  std::string callee;             // Call
  std::vector<Expr> args;         // Call
};

/// A summand is either an action-guarded branch or an indexed sum whose
/// expansion yields guarded branches.
struct Summand {
  enum class Kind : std::uint8_t { Guarded, Indexed };

  Kind kind = Kind::Guarded;
  // Guarded
  Action act;
  Term cont;
  // Indexed
  std::vector<std::string> vars;
  Expr lo, hi;
  Constraint where;
  std::shared_ptr<const Summand> body;
};

Term mk_nil();
Term mk_sum(std::vector<Summand> summands);
Term mk_call(std::string name, std::vector<Expr> args);
Summand mk_guarded(Action a, Term cont);
Summand mk_indexed(std::vector<std::string> vars, Expr lo, Expr hi, Constraint where,
                   Summand body);

// --------------------------------------------------------------- substitution

/// Values substituted for variables: agent/integer values or ground
/// formulas (for input-bound formula variables).
using Binding = std::variant<std::int64_t, Formula>;
using Bindings = std::map<std::string, Binding>;

/// Replaces free occurrences only; input and indexed-sum binders shadow.
/// Throws SpecError when a binding's sort does not fit the occurrence.
Term substitute(const Term& t, const Bindings& b);
Formula substitute_formula(const Formula& f, const Bindings& b);
Expr substitute_expr(const Expr& e, const Bindings& b);

struct GuardedBranch {
  Action act;
  Term cont;
};

/// Expands an indexed summand into plain guarded branches: one per index
/// tuple satisfying the constraint, in ascending lexicographic order.
/// An empty expansion is legal and stands for the inactive process.
std::vector<GuardedBranch> expand_indexed_sum(const Summand& s, const Env& env);

// --------------------------------------------------------------- declarations

struct PropFamily {
  std::string name;
  std::vector<std::pair<std::int64_t, std::int64_t>> ranges;  // inclusive
};

/// The flattened, ordered proposition universe.
struct PropTable {
  struct Entry {
    std::string display;           // e.g. `p[2][0]`
    std::string family;
    std::vector<std::int64_t> indices;
  };

  std::vector<Entry> entries;
  std::vector<std::string> names;  // display names, position-indexed
  std::map<std::string, std::uint32_t> by_name;
  std::vector<PropFamily> families;

  std::uint32_t size() const { return static_cast<std::uint32_t>(entries.size()); }
  const PropFamily* family(const std::string& name) const;

  /// Flat position of family[indices]; throws SpecError when the family is
  /// unknown, the index count is wrong, or an index is out of range.
  std::uint32_t resolve(const std::string& family, std::span<const std::int64_t> idx) const;

  /// Builds the table, flattening families in declaration order, row-major.
  static PropTable build(std::vector<PropFamily> families);
};

struct ObservesClause {
  enum class Kind : std::uint8_t { All, None, Props };
  Kind kind = Kind::None;
  std::vector<std::uint32_t> props;  // flat ids, sorted
};

struct AgentDecl {
  std::uint32_t id = 0;
  std::string name;  // optional symbolic name
  Term init;
  ObservesClause obs;
  int line = 0, col = 0;
};

struct ConstDef {
  std::string name;
  std::vector<std::string> formals;
  Term body;
  int line = 0, col = 0;
};

struct SystemSpec {
  PropTable props;
  std::vector<ConstDef> consts;
  std::vector<AgentDecl> agents;     // sorted by id
  std::uint64_t init_mask = 0;       // X0 as a bit mask over flat positions

  const ConstDef* find_const(const std::string& name) const;
  std::vector<std::uint32_t> agent_ids() const;
  /// Symbolic agent names as a global integer environment.
  Env global_env() const;
};

// ------------------------------------------------------------------- printing

std::string print_expr(const Expr& e);
std::string print_formula(const Formula& f);
std::string print_action(const Action& a);
std::string print_constraint(const Constraint& c);
std::string print_term(const Term& t);
std::string print_system(const SystemSpec& s);

// ----------------------------------------------------------------- validation

struct ValidateOptions {
  std::uint32_t world_cap = 20;
  bool enforce_world_cap = true;
};

/// Reads KEPAL_WORLD_CAP when set, else returns 20.
std::uint32_t default_world_cap();

/// All load-time checks: unique flat propositions, non-empty ranges,
/// binding and sorts, constant arity, reserved names, guarded recursion,
/// unique agent ids, closed initial terms, X0 within At, world cap.
/// Returns lint warnings; throws SpecError on the first hard error.
std::vector<std::string> validate_system(const SystemSpec& s, const ValidateOptions& opts);

/// Grounds a syntax formula into the flat representation. All index,
/// agent, and formula variables must be resolvable under env.
EFormula ground_formula(const Formula& f, const Env& env, const PropTable& props,
                        std::span<const std::uint32_t> agent_ids, FormulaInterner& in);

/// Lifts a flat formula back into syntax (used when substituting received
/// formulas into continuations).
Formula formula_from_ground(EFormula f, const PropTable& props);

}  // namespace kepal::ast
