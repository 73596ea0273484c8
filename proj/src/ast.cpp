#include "kepal/ast.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <functional>
#include <set>

namespace kepal::ast {

// ---------------------------------------------------------------- expressions

Expr mk_lit(std::int64_t v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Lit;
  n->lit = v;
  return n;
}

Expr mk_var(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Var;
  n->var = std::move(name);
  return n;
}

Expr mk_bin(ExprNode::Op op, Expr l, Expr r) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Bin;
  n->op = op;
  n->l = std::move(l);
  n->r = std::move(r);
  return n;
}

std::int64_t eval_expr(const Expr& e, const Env& env) {
  switch (e->kind) {
    case ExprNode::Kind::Lit:
      return e->lit;
    case ExprNode::Kind::Var: {
      auto it = env.find(e->var);
      if (it == env.end()) throw SpecError("unbound variable " + e->var);
      return it->second;
    }
    case ExprNode::Kind::Bin: {
      std::int64_t a = eval_expr(e->l, env);
      std::int64_t b = eval_expr(e->r, env);
      switch (e->op) {
        case ExprNode::Op::Add: return a + b;
        case ExprNode::Op::Sub: return a - b;
        case ExprNode::Op::Mul: return a * b;
        case ExprNode::Op::Mod:
          if (b == 0) throw SpecError("mod 0 in expression " + print_expr(e));
          {
            std::int64_t m = a % b;
            std::int64_t d = b < 0 ? -b : b;
            return m < 0 ? m + d : m;
          }
      }
    }
  }
  throw SpecError("bad expression node");
}

// ------------------------------------------------------------------- formulas

namespace {
Formula mk_node(FormulaNode n) { return std::make_shared<FormulaNode>(std::move(n)); }
}  // namespace

Formula mk_true() {
  FormulaNode n;
  n.kind = FormulaNode::Kind::True;
  return mk_node(std::move(n));
}
Formula mk_prop(PropRef p) {
  FormulaNode n;
  n.kind = FormulaNode::Kind::Prop;
  n.prop = std::move(p);
  return mk_node(std::move(n));
}
Formula mk_fvar(std::string name) {
  FormulaNode n;
  n.kind = FormulaNode::Kind::FVar;
  n.fvar = std::move(name);
  return mk_node(std::move(n));
}
Formula mk_not(Formula f) {
  FormulaNode n;
  n.kind = FormulaNode::Kind::Not;
  n.a = std::move(f);
  return mk_node(std::move(n));
}
Formula mk_and(Formula a, Formula b) {
  FormulaNode n;
  n.kind = FormulaNode::Kind::And;
  n.a = std::move(a);
  n.b = std::move(b);
  return mk_node(std::move(n));
}
Formula mk_or(Formula a, Formula b) {
  FormulaNode n;
  n.kind = FormulaNode::Kind::Or;
  n.a = std::move(a);
  n.b = std::move(b);
  return mk_node(std::move(n));
}
Formula mk_imp(Formula a, Formula b) {
  FormulaNode n;
  n.kind = FormulaNode::Kind::Imp;
  n.a = std::move(a);
  n.b = std::move(b);
  return mk_node(std::move(n));
}
Formula mk_know(Expr agent, Formula f) {
  FormulaNode n;
  n.kind = FormulaNode::Kind::Know;
  n.agent = std::move(agent);
  n.a = std::move(f);
  return mk_node(std::move(n));
}

// ---------------------------------------------------------------- constraints

namespace {
Constraint mk_cnode(ConstraintNode n) {
  return std::make_shared<ConstraintNode>(std::move(n));
}
}  // namespace

Constraint mk_ctrue() {
  ConstraintNode n;
  n.kind = ConstraintNode::Kind::True;
  return mk_cnode(std::move(n));
}
Constraint mk_cmp(ConstraintNode::Kind k, Expr l, Expr r) {
  ConstraintNode n;
  n.kind = k;
  n.l = std::move(l);
  n.r = std::move(r);
  return mk_cnode(std::move(n));
}
Constraint mk_in(Expr l, std::vector<Expr> set, bool negated) {
  ConstraintNode n;
  n.kind = ConstraintNode::Kind::In;
  n.l = std::move(l);
  n.set = std::move(set);
  n.negated = negated;
  return mk_cnode(std::move(n));
}
Constraint mk_cand(Constraint a, Constraint b) {
  ConstraintNode n;
  n.kind = ConstraintNode::Kind::And;
  n.a = std::move(a);
  n.b = std::move(b);
  return mk_cnode(std::move(n));
}
Constraint mk_cor(Constraint a, Constraint b) {
  ConstraintNode n;
  n.kind = ConstraintNode::Kind::Or;
  n.a = std::move(a);
  n.b = std::move(b);
  return mk_cnode(std::move(n));
}
Constraint mk_cnot(Constraint a) {
  ConstraintNode n;
  n.kind = ConstraintNode::Kind::Not;
  n.a = std::move(a);
  return mk_cnode(std::move(n));
}

bool eval_constraint(const Constraint& c, const Env& env) {
  switch (c->kind) {
    case ConstraintNode::Kind::True:
      return true;
    case ConstraintNode::Kind::Ne:
      return eval_expr(c->l, env) != eval_expr(c->r, env);
    case ConstraintNode::Kind::Lt:
      return eval_expr(c->l, env) < eval_expr(c->r, env);
    case ConstraintNode::Kind::In: {
      std::int64_t v = eval_expr(c->l, env);
      bool in = false;
      for (const auto& e : c->set)
        if (eval_expr(e, env) == v) {
          in = true;
          break;
        }
      return c->negated ? !in : in;
    }
    case ConstraintNode::Kind::And:
      return eval_constraint(c->a, env) && eval_constraint(c->b, env);
    case ConstraintNode::Kind::Or:
      return eval_constraint(c->a, env) || eval_constraint(c->b, env);
    case ConstraintNode::Kind::Not:
      return !eval_constraint(c->a, env);
  }
  return false;
}

// ---------------------------------------------------------------------- terms

Term mk_nil() {
  auto n = std::make_shared<TermNode>();
  n->kind = TermNode::Kind::Nil;
  return n;
}
Term mk_sum(std::vector<Summand> summands) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermNode::Kind::Sum;
  n->summands = std::move(summands);
  return n;
}
Term mk_call(std::string name, std::vector<Expr> args) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermNode::Kind::Call;
  n->callee = std::move(name);
  n->args = std::move(args);
  return n;
}
Summand mk_guarded(Action a, Term cont) {
  Summand s;
  s.kind = Summand::Kind::Guarded;
  s.act = std::move(a);
  s.cont = std::move(cont);
  return s;
}
Summand mk_indexed(std::vector<std::string> vars, Expr lo, Expr hi, Constraint where,
                   Summand body) {
  Summand s;
  s.kind = Summand::Kind::Indexed;
  s.vars = std::move(vars);
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  s.where = std::move(where);
  s.body = std::make_shared<const Summand>(std::move(body));
  return s;
}

// --------------------------------------------------------------- substitution

Expr substitute_expr(const Expr& e, const Bindings& b) {
  switch (e->kind) {
    case ExprNode::Kind::Lit:
      return e;
    case ExprNode::Kind::Var: {
      auto it = b.find(e->var);
      if (it == b.end()) return e;
      if (const auto* v = std::get_if<std::int64_t>(&it->second)) return mk_lit(*v);
      throw SpecError("sort mismatch: formula value substituted for " + e->var +
                      " in an expression");
    }
    case ExprNode::Kind::Bin: {
      Expr l = substitute_expr(e->l, b);
      Expr r = substitute_expr(e->r, b);
      if (l == e->l && r == e->r) return e;
      return mk_bin(e->op, std::move(l), std::move(r));
    }
  }
  return e;
}

namespace {

PropRef substitute_prop(const PropRef& p, const Bindings& b) {
  PropRef out{p.name, {}};
  out.indices.reserve(p.indices.size());
  for (const auto& e : p.indices) out.indices.push_back(substitute_expr(e, b));
  return out;
}

Constraint substitute_constraint(const Constraint& c, const Bindings& b) {
  switch (c->kind) {
    case ConstraintNode::Kind::True:
      return c;
    case ConstraintNode::Kind::Ne:
    case ConstraintNode::Kind::Lt:
      return mk_cmp(c->kind, substitute_expr(c->l, b), substitute_expr(c->r, b));
    case ConstraintNode::Kind::In: {
      std::vector<Expr> set;
      set.reserve(c->set.size());
      for (const auto& e : c->set) set.push_back(substitute_expr(e, b));
      return mk_in(substitute_expr(c->l, b), std::move(set), c->negated);
    }
    case ConstraintNode::Kind::And:
      return mk_cand(substitute_constraint(c->a, b), substitute_constraint(c->b, b));
    case ConstraintNode::Kind::Or:
      return mk_cor(substitute_constraint(c->a, b), substitute_constraint(c->b, b));
    case ConstraintNode::Kind::Not:
      return mk_cnot(substitute_constraint(c->a, b));
  }
  return c;
}

Bindings without(const Bindings& b, std::span<const std::string> names) {
  Bindings out = b;
  for (const auto& n : names)
    if (!n.empty()) out.erase(n);
  return out;
}

Action substitute_action(const Action& a, const Bindings& b) {
  Action out = a;
  for (auto& e : out.indices) e = substitute_expr(e, b);
  switch (a.kind) {
    case Action::Kind::Internal:
    case Action::Kind::Input:
      break;
    case Action::Kind::Output:
      out.dest = substitute_expr(a.dest, b);
      out.payload = substitute_formula(a.payload, b);
      break;
    case Action::Kind::Set:
      out.target = substitute_prop(a.target, b);
      out.value = substitute_expr(a.value, b);
      break;
  }
  return out;
}

Summand substitute_summand(const Summand& s, const Bindings& b) {
  if (s.kind == Summand::Kind::Guarded) {
    Summand out;
    out.kind = Summand::Kind::Guarded;
    out.act = substitute_action(s.act, b);
    if (s.act.kind == Action::Kind::Input) {
      std::string binders[2] = {s.act.bind_y, s.act.bind_f};
      out.cont = substitute(s.cont, without(b, binders));
    } else {
      out.cont = substitute(s.cont, b);
    }
    return out;
  }
  Summand out;
  out.kind = Summand::Kind::Indexed;
  out.vars = s.vars;
  out.lo = substitute_expr(s.lo, b);
  out.hi = substitute_expr(s.hi, b);
  Bindings inner = without(b, s.vars);
  out.where = substitute_constraint(s.where, inner);
  out.body = std::make_shared<const Summand>(substitute_summand(*s.body, inner));
  return out;
}

}  // namespace

Formula substitute_formula(const Formula& f, const Bindings& b) {
  switch (f->kind) {
    case FormulaNode::Kind::True:
      return f;
    case FormulaNode::Kind::Prop:
      return mk_prop(substitute_prop(f->prop, b));
    case FormulaNode::Kind::FVar: {
      auto it = b.find(f->fvar);
      if (it == b.end()) return f;
      if (const auto* g = std::get_if<Formula>(&it->second)) return *g;
      throw SpecError("sort mismatch: integer value substituted for formula variable " +
                      f->fvar);
    }
    case FormulaNode::Kind::Not:
      return mk_not(substitute_formula(f->a, b));
    case FormulaNode::Kind::And:
      return mk_and(substitute_formula(f->a, b), substitute_formula(f->b, b));
    case FormulaNode::Kind::Or:
      return mk_or(substitute_formula(f->a, b), substitute_formula(f->b, b));
    case FormulaNode::Kind::Imp:
      return mk_imp(substitute_formula(f->a, b), substitute_formula(f->b, b));
    case FormulaNode::Kind::Know:
      return mk_know(substitute_expr(f->agent, b), substitute_formula(f->a, b));
  }
  return f;
}

Term substitute(const Term& t, const Bindings& b) {
  if (b.empty()) return t;
  switch (t->kind) {
    case TermNode::Kind::Nil:
      return t;
    case TermNode::Kind::Call: {
      std::vector<Expr> args;
      args.reserve(t->args.size());
      for (const auto& e : t->args) args.push_back(substitute_expr(e, b));
      return mk_call(t->callee, std::move(args));
    }
    case TermNode::Kind::Sum: {
      std::vector<Summand> out;
      out.reserve(t->summands.size());
      for (const auto& s : t->summands) out.push_back(substitute_summand(s, b));
      return mk_sum(std::move(out));
    }
  }
  return t;
}

std::vector<GuardedBranch> expand_indexed_sum(const Summand& s, const Env& env) {
  assert(s.kind == Summand::Kind::Indexed);
  std::vector<GuardedBranch> out;

  const std::int64_t lo = eval_expr(s.lo, env);
  const std::int64_t hi = eval_expr(s.hi, env);
  if (lo > hi) return out;

  std::vector<std::int64_t> tuple(s.vars.size());
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == s.vars.size()) {
      Env inner = env;
      Bindings binds;
      for (std::size_t i = 0; i < s.vars.size(); ++i) {
        inner[s.vars[i]] = tuple[i];
        binds[s.vars[i]] = tuple[i];
      }
      if (!eval_constraint(s.where, inner)) return;
      Summand body = substitute_summand(*s.body, binds);
      if (body.kind == Summand::Kind::Guarded) {
        out.push_back(GuardedBranch{std::move(body.act), std::move(body.cont)});
      } else {
        auto nested = expand_indexed_sum(body, env);
        out.insert(out.end(), std::make_move_iterator(nested.begin()),
                   std::make_move_iterator(nested.end()));
      }
      if (out.size() > 1'000'000)
        throw SpecError("indexed sum expansion exceeds 1000000 branches");
      return;
    }
    for (std::int64_t v = lo; v <= hi; ++v) {
      tuple[k] = v;
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

// --------------------------------------------------------------- declarations

const PropFamily* PropTable::family(const std::string& name) const {
  for (const auto& f : families)
    if (f.name == name) return &f;
  return nullptr;
}

std::uint32_t PropTable::resolve(const std::string& fam,
                                 std::span<const std::int64_t> idx) const {
  std::uint32_t base = 0;
  for (const auto& f : families) {
    std::uint32_t sz = 1;
    for (auto [lo, hi] : f.ranges) sz *= static_cast<std::uint32_t>(hi - lo + 1);
    if (f.name != fam) {
      base += sz;
      continue;
    }
    if (idx.size() != f.ranges.size())
      throw SpecError("proposition " + fam + " takes " +
                      std::to_string(f.ranges.size()) + " indices, got " +
                      std::to_string(idx.size()));
    std::uint32_t off = 0;
    for (std::size_t d = 0; d < idx.size(); ++d) {
      auto [lo, hi] = f.ranges[d];
      if (idx[d] < lo || idx[d] > hi) {
        std::string disp = fam;
        for (auto v : idx) disp += "[" + std::to_string(v) + "]";
        throw SpecError("unknown proposition " + disp);
      }
      off = off * static_cast<std::uint32_t>(hi - lo + 1) +
            static_cast<std::uint32_t>(idx[d] - lo);
    }
    return base + off;
  }
  throw SpecError("unknown proposition " + fam);
}

PropTable PropTable::build(std::vector<PropFamily> families) {
  PropTable t;
  t.families = std::move(families);
  for (const auto& f : t.families) {
    for (auto [lo, hi] : f.ranges)
      if (lo > hi)
        throw SpecError("empty index range " + std::to_string(lo) + ".." +
                        std::to_string(hi) + " for proposition " + f.name);
    std::vector<std::int64_t> idx;
    std::function<void(std::size_t)> rec = [&](std::size_t d) {
      if (d == f.ranges.size()) {
        Entry e;
        e.family = f.name;
        e.indices = idx;
        e.display = f.name;
        for (auto v : idx) e.display += "[" + std::to_string(v) + "]";
        auto pos = static_cast<std::uint32_t>(t.entries.size());
        if (!t.by_name.emplace(e.display, pos).second)
          throw SpecError("duplicate proposition " + e.display);
        t.names.push_back(e.display);
        t.entries.push_back(std::move(e));
        return;
      }
      for (std::int64_t v = f.ranges[d].first; v <= f.ranges[d].second; ++v) {
        idx.push_back(v);
        rec(d + 1);
        idx.pop_back();
      }
    };
    rec(0);
  }
  return t;
}

const ConstDef* SystemSpec::find_const(const std::string& name) const {
  for (const auto& c : consts)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<std::uint32_t> SystemSpec::agent_ids() const {
  std::vector<std::uint32_t> ids;
  ids.reserve(agents.size());
  for (const auto& a : agents) ids.push_back(a.id);
  return ids;
}

Env SystemSpec::global_env() const {
  Env env;
  for (const auto& a : agents)
    if (!a.name.empty()) env[a.name] = a.id;
  return env;
}

// ------------------------------------------------------------------- printing

namespace {

// Precedences: Add/Sub 1, Mul/Mod 2.
int expr_prec(const Expr& e) {
  if (e->kind != ExprNode::Kind::Bin) return 3;
  return (e->op == ExprNode::Op::Add || e->op == ExprNode::Op::Sub) ? 1 : 2;
}

std::string print_expr_p(const Expr& e, int ctx) {
  std::string s;
  switch (e->kind) {
    case ExprNode::Kind::Lit:
      s = std::to_string(e->lit);
      break;
    case ExprNode::Kind::Var:
      s = e->var;
      break;
    case ExprNode::Kind::Bin: {
      const char* op = nullptr;
      switch (e->op) {
        case ExprNode::Op::Add: op = " + "; break;
        case ExprNode::Op::Sub: op = " - "; break;
        case ExprNode::Op::Mul: op = " * "; break;
        case ExprNode::Op::Mod: op = " mod "; break;
      }
      int p = expr_prec(e);
      s = print_expr_p(e->l, p) + op + print_expr_p(e->r, p + 1);
      if (p < ctx) s = "(" + s + ")";
      break;
    }
  }
  return s;
}

std::string print_propref(const PropRef& p) {
  std::string s = p.name;
  for (const auto& e : p.indices) s += "[" + print_expr_p(e, 0) + "]";
  return s;
}

// Precedences: Imp 1 (right-assoc), Or 2, And 3, unary 4, atom 5.
int formula_prec(const Formula& f) {
  switch (f->kind) {
    case FormulaNode::Kind::Imp: return 1;
    case FormulaNode::Kind::Or: return 2;
    case FormulaNode::Kind::And: return 3;
    case FormulaNode::Kind::Not:
    case FormulaNode::Kind::Know: return 4;
    default: return 5;
  }
}

std::string print_formula_p(const Formula& f, int ctx) {
  std::string s;
  int p = formula_prec(f);
  switch (f->kind) {
    case FormulaNode::Kind::True: s = "true"; break;
    case FormulaNode::Kind::Prop: s = print_propref(f->prop); break;
    case FormulaNode::Kind::FVar: s = f->fvar; break;
    case FormulaNode::Kind::Not: s = "!" + print_formula_p(f->a, 4); break;
    case FormulaNode::Kind::Know:
      s = "K[" + print_expr_p(f->agent, 0) + "] " + print_formula_p(f->a, 4);
      break;
    case FormulaNode::Kind::And:
      s = print_formula_p(f->a, 3) + " & " + print_formula_p(f->b, 4);
      break;
    case FormulaNode::Kind::Or:
      s = print_formula_p(f->a, 2) + " | " + print_formula_p(f->b, 3);
      break;
    case FormulaNode::Kind::Imp:
      s = print_formula_p(f->a, 2) + " -> " + print_formula_p(f->b, 1);
      break;
  }
  if (p < ctx) s = "(" + s + ")";
  return s;
}

int constraint_prec(const Constraint& c) {
  switch (c->kind) {
    case ConstraintNode::Kind::Or: return 1;
    case ConstraintNode::Kind::And: return 2;
    case ConstraintNode::Kind::Not: return 3;
    default: return 4;
  }
}

std::string print_constraint_p(const Constraint& c, int ctx) {
  std::string s;
  int p = constraint_prec(c);
  switch (c->kind) {
    case ConstraintNode::Kind::True: s = "true"; break;
    case ConstraintNode::Kind::Ne:
      s = print_expr_p(c->l, 0) + " != " + print_expr_p(c->r, 0);
      break;
    case ConstraintNode::Kind::Lt:
      s = print_expr_p(c->l, 0) + " < " + print_expr_p(c->r, 0);
      break;
    case ConstraintNode::Kind::In: {
      s = print_expr_p(c->l, 0);
      s += c->negated ? " notin {" : " in {";
      for (std::size_t i = 0; i < c->set.size(); ++i) {
        if (i) s += ", ";
        s += print_expr_p(c->set[i], 0);
      }
      s += "}";
      break;
    }
    case ConstraintNode::Kind::And:
      s = print_constraint_p(c->a, 2) + " & " + print_constraint_p(c->b, 3);
      break;
    case ConstraintNode::Kind::Or:
      s = print_constraint_p(c->a, 1) + " | " + print_constraint_p(c->b, 2);
      break;
    case ConstraintNode::Kind::Not:
      s = "!(" + print_constraint_p(c->a, 0) + ")";
      break;
  }
  if (p < ctx) s = "(" + s + ")";
  return s;
}

std::string print_summand(const Summand& s);

std::string print_cont(const Term& t) {
  // Parenthesize multi-way choices appearing as a continuation.
  if (t->kind == TermNode::Kind::Sum && t->summands.size() > 1)
    return "(" + print_term(t) + ")";
  return print_term(t);
}

std::string print_summand(const Summand& s) {
  if (s.kind == Summand::Kind::Guarded)
    return print_action(s.act) + "." + print_cont(s.cont);
  std::string out = "sum ";
  for (std::size_t i = 0; i < s.vars.size(); ++i) {
    if (i) out += ",";
    out += s.vars[i];
  }
  out += " : " + print_expr_p(s.lo, 0) + ".." + print_expr_p(s.hi, 0);
  if (s.where->kind != ConstraintNode::Kind::True)
    out += " where " + print_constraint_p(s.where, 0);
  out += " . " + print_summand(*s.body);
  return out;
}

}  // namespace

std::string print_expr(const Expr& e) { return print_expr_p(e, 0); }
std::string print_formula(const Formula& f) { return print_formula_p(f, 0); }
std::string print_constraint(const Constraint& c) { return print_constraint_p(c, 0); }

std::string print_action(const Action& a) {
  std::string s = a.name;
  for (const auto& e : a.indices) s += "[" + print_expr_p(e, 0) + "]";
  switch (a.kind) {
    case Action::Kind::Internal:
      return s;
    case Action::Kind::Input:
      return s + "?(" + (a.bind_y.empty() ? "_" : a.bind_y) + ", " +
             (a.bind_f.empty() ? "_" : a.bind_f) + ")";
    case Action::Kind::Output:
      return s + "!(" + print_expr_p(a.dest, 0) + ", " + print_formula_p(a.payload, 0) + ")";
    case Action::Kind::Set:
      return "set(" + print_propref(a.target) + ", " + print_expr_p(a.value, 0) + ")";
  }
  return s;
}

std::string print_term(const Term& t) {
  switch (t->kind) {
    case TermNode::Kind::Nil:
      return "0";
    case TermNode::Kind::Call: {
      std::string s = t->callee;
      if (!t->args.empty()) {
        s += "(";
        for (std::size_t i = 0; i < t->args.size(); ++i) {
          if (i) s += ", ";
          s += print_expr_p(t->args[i], 0);
        }
        s += ")";
      }
      return s;
    }
    case TermNode::Kind::Sum: {
      std::string s;
      for (std::size_t i = 0; i < t->summands.size(); ++i) {
        if (i) s += " + ";
        s += print_summand(t->summands[i]);
      }
      return s;
    }
  }
  return "0";
}

std::string print_system(const SystemSpec& s) {
  std::string out = "props: ";
  for (std::size_t i = 0; i < s.props.families.size(); ++i) {
    const auto& f = s.props.families[i];
    if (i) out += ", ";
    out += f.name;
    for (auto [lo, hi] : f.ranges)
      out += "[" + std::to_string(lo) + ".." + std::to_string(hi) + "]";
  }
  out += "\n";
  for (const auto& c : s.consts) {
    out += "const " + c.name;
    if (!c.formals.empty()) {
      out += "(";
      for (std::size_t i = 0; i < c.formals.size(); ++i) {
        if (i) out += ", ";
        out += c.formals[i];
      }
      out += ")";
    }
    out += " := " + print_term(c.body) + "\n";
  }
  out += "pool:\n";
  for (const auto& a : s.agents) {
    out += "agent ";
    if (!a.name.empty()) out += a.name + " = ";
    out += std::to_string(a.id) + " : " + print_term(a.init) + " observes ";
    switch (a.obs.kind) {
      case ObservesClause::Kind::All: out += "all"; break;
      case ObservesClause::Kind::None: out += "none"; break;
      case ObservesClause::Kind::Props: {
        out += "{";
        for (std::size_t i = 0; i < a.obs.props.size(); ++i) {
          if (i) out += ", ";
          out += s.props.names[a.obs.props[i]];
        }
        out += "}";
        break;
      }
    }
    out += "\n";
  }
  out += "init: {";
  bool first = true;
  for (std::uint32_t k = 0; k < s.props.size(); ++k) {
    if (!(s.init_mask >> k & 1)) continue;
    if (!first) out += ", ";
    out += s.props.names[k];
    first = false;
  }
  out += "}\n";
  return out;
}

// ----------------------------------------------------------------- validation

std::uint32_t default_world_cap() {
  if (const char* env = std::getenv("KEPAL_WORLD_CAP")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0 && v <= 63) return static_cast<std::uint32_t>(v);
  }
  return 20;
}

namespace {

struct Scope {
  std::set<std::string> ints;
  std::set<std::string> formulas;
};

class Validator {
public:
  Validator(const SystemSpec& s, const ValidateOptions& o) : spec(s), opts(o) {}

  std::vector<std::string> run() {
    if (spec.props.size() > 63)
      throw SpecError("proposition universe has " + std::to_string(spec.props.size()) +
                      " entries; the hard limit is 63");
    if (opts.enforce_world_cap && spec.props.size() > opts.world_cap)
      throw SpecError("proposition universe has " + std::to_string(spec.props.size()) +
                      " entries; the world cap is " + std::to_string(opts.world_cap) +
                      " (set KEPAL_WORLD_CAP to raise it)");

    std::set<std::string> const_names;
    for (const auto& c : spec.consts)
      if (!const_names.insert(c.name).second)
        throw SpecError("duplicate constant " + c.name, c.line, c.col);

    if (spec.agents.empty()) throw SpecError("pool declares no agents");
    if (spec.agents.size() > 64)
      throw SpecError("pool declares more than 64 agents");
    std::set<std::uint32_t> ids;
    for (const auto& a : spec.agents)
      if (!ids.insert(a.id).second)
        throw SpecError("duplicate agent id " + std::to_string(a.id), a.line, a.col);
    for (std::size_t i = 1; i < spec.agents.size(); ++i)
      if (spec.agents[i - 1].id > spec.agents[i].id)
        throw SpecError("agent list must be sorted by id");

    if (spec.props.size() < 64 && (spec.init_mask >> spec.props.size()) != 0)
      throw SpecError("initial true-set mentions undeclared propositions");

    Scope globals;
    for (const auto& a : spec.agents)
      if (!a.name.empty()) globals.ints.insert(a.name);

    for (const auto& c : spec.consts) {
      Scope sc = globals;
      for (const auto& x : c.formals) sc.ints.insert(x);
      try {
        check_term(c.body, sc);
      } catch (SpecError& e) {
        throw SpecError(std::string(e.what()) + " (in constant " + c.name + ")",
                        c.line, c.col);
      }
    }
    for (const auto& a : spec.agents) {
      try {
        check_term(a.init, globals);
      } catch (SpecError& e) {
        throw SpecError(std::string(e.what()) + " (in agent " + std::to_string(a.id) + ")",
                        a.line, a.col);
      }
    }

    check_guardedness();
    return std::move(warnings);
  }

private:
  void check_expr(const Expr& e, const Scope& sc) {
    switch (e->kind) {
      case ExprNode::Kind::Lit:
        return;
      case ExprNode::Kind::Var:
        if (!sc.ints.count(e->var)) throw SpecError("unbound variable " + e->var);
        return;
      case ExprNode::Kind::Bin:
        check_expr(e->l, sc);
        check_expr(e->r, sc);
        return;
    }
  }

  void check_propref(const PropRef& p, const Scope& sc) {
    const PropFamily* f = spec.props.family(p.name);
    if (!f) throw SpecError("unknown proposition " + p.name);
    if (p.indices.size() != f->ranges.size())
      throw SpecError("proposition " + p.name + " takes " +
                      std::to_string(f->ranges.size()) + " indices, got " +
                      std::to_string(p.indices.size()));
    bool all_lits = true;
    std::vector<std::int64_t> lits;
    for (const auto& e : p.indices) {
      check_expr(e, sc);
      if (e->kind == ExprNode::Kind::Lit)
        lits.push_back(e->lit);
      else
        all_lits = false;
    }
    if (all_lits && !p.indices.empty()) spec.props.resolve(p.name, lits);
  }

  void check_formula(const Formula& f, const Scope& sc) {
    switch (f->kind) {
      case FormulaNode::Kind::True:
        return;
      case FormulaNode::Kind::Prop:
        check_propref(f->prop, sc);
        return;
      case FormulaNode::Kind::FVar:
        if (!sc.formulas.count(f->fvar))
          throw SpecError("unbound variable " + f->fvar);
        return;
      case FormulaNode::Kind::Not:
        check_formula(f->a, sc);
        return;
      case FormulaNode::Kind::And:
      case FormulaNode::Kind::Or:
      case FormulaNode::Kind::Imp:
        check_formula(f->a, sc);
        check_formula(f->b, sc);
        return;
      case FormulaNode::Kind::Know:
        check_expr(f->agent, sc);
        check_formula(f->a, sc);
        return;
    }
  }

  void check_action(const Action& a, const Scope& sc) {
    for (const auto& e : a.indices) check_expr(e, sc);
    switch (a.kind) {
      case Action::Kind::Internal:
        if (a.name == "set")
          throw SpecError("`set` is reserved for assignment actions");
        return;
      case Action::Kind::Input:
      case Action::Kind::Output:
        if (a.name == "tau" || a.name == "set")
          throw SpecError("reserved channel name " + a.name);
        if (a.kind == Action::Kind::Output) {
          check_expr(a.dest, sc);
          check_formula(a.payload, sc);
          if (a.dest->kind == ExprNode::Kind::Lit) {
            bool known = false;
            for (const auto& ag : spec.agents)
              if (static_cast<std::int64_t>(ag.id) == a.dest->lit) known = true;
            if (!known)
              warnings.push_back("output on `" + a.name + "` targets undeclared agent " +
                                 std::to_string(a.dest->lit) + "; the branch is dead");
          }
        }
        return;
      case Action::Kind::Set:
        check_propref(a.target, sc);
        check_expr(a.value, sc);
        return;
    }
  }

  void check_summand(const Summand& s, const Scope& sc) {
    if (s.kind == Summand::Kind::Guarded) {
      check_action(s.act, sc);
      Scope inner = sc;
      if (s.act.kind == Action::Kind::Input) {
        if (!s.act.bind_y.empty()) inner.ints.insert(s.act.bind_y);
        if (!s.act.bind_f.empty()) inner.formulas.insert(s.act.bind_f);
      }
      check_term(s.cont, inner);
      return;
    }
    check_expr(s.lo, sc);
    check_expr(s.hi, sc);
    Scope inner = sc;
    for (const auto& v : s.vars) inner.ints.insert(v);
    check_constraint(s.where, inner);
    check_summand(*s.body, inner);
  }

  void check_constraint(const Constraint& c, const Scope& sc) {
    switch (c->kind) {
      case ConstraintNode::Kind::True:
        return;
      case ConstraintNode::Kind::Ne:
      case ConstraintNode::Kind::Lt:
        check_expr(c->l, sc);
        check_expr(c->r, sc);
        return;
      case ConstraintNode::Kind::In:
        check_expr(c->l, sc);
        for (const auto& e : c->set) check_expr(e, sc);
        return;
      case ConstraintNode::Kind::And:
      case ConstraintNode::Kind::Or:
        check_constraint(c->a, sc);
        check_constraint(c->b, sc);
        return;
      case ConstraintNode::Kind::Not:
        check_constraint(c->a, sc);
        return;
    }
  }

  void check_term(const Term& t, const Scope& sc) {
    switch (t->kind) {
      case TermNode::Kind::Nil:
        return;
      case TermNode::Kind::Call: {
        const ConstDef* d = spec.find_const(t->callee);
        if (!d) throw SpecError("unknown constant " + t->callee);
        if (d->formals.size() != t->args.size())
          throw SpecError("constant " + t->callee + " takes " +
                          std::to_string(d->formals.size()) + " arguments, got " +
                          std::to_string(t->args.size()));
        for (const auto& e : t->args) check_expr(e, sc);
        return;
      }
      case TermNode::Kind::Sum:
        for (const auto& s : t->summands) check_summand(s, sc);
        return;
    }
  }

  // A cycle of constant calls with no action prefix in between would make
  // the unfolding loop; bodies that are bare calls are the only unguarded
  // positions, since every summand is action-guarded.
  void check_guardedness() {
    std::map<std::string, std::string> edge;
    for (const auto& c : spec.consts)
      if (c.body->kind == TermNode::Kind::Call) edge[c.name] = c.body->callee;
    for (const auto& c : spec.consts) {
      std::set<std::string> seen;
      std::string cur = c.name;
      while (edge.count(cur)) {
        if (!seen.insert(cur).second)
          throw SpecError("unguarded recursion through constant " + cur, c.line, c.col);
        cur = edge[cur];
      }
    }
  }

  const SystemSpec& spec;
  const ValidateOptions& opts;
  std::vector<std::string> warnings;
};

}  // namespace

std::vector<std::string> validate_system(const SystemSpec& s, const ValidateOptions& opts) {
  return Validator(s, opts).run();
}

EFormula ground_formula(const Formula& f, const Env& env, const PropTable& props,
                        std::span<const std::uint32_t> agent_ids, FormulaInterner& in) {
  switch (f->kind) {
    case FormulaNode::Kind::True:
      return in.truth();
    case FormulaNode::Kind::Prop: {
      std::vector<std::int64_t> idx;
      idx.reserve(f->prop.indices.size());
      for (const auto& e : f->prop.indices) idx.push_back(eval_expr(e, env));
      return in.prop(props.resolve(f->prop.name, idx));
    }
    case FormulaNode::Kind::FVar:
      throw SpecError("unresolved formula variable " + f->fvar);
    case FormulaNode::Kind::Not:
      return in.negate(ground_formula(f->a, env, props, agent_ids, in));
    case FormulaNode::Kind::And:
      return in.conj(ground_formula(f->a, env, props, agent_ids, in),
                     ground_formula(f->b, env, props, agent_ids, in));
    case FormulaNode::Kind::Or:
      return in.disj(ground_formula(f->a, env, props, agent_ids, in),
                     ground_formula(f->b, env, props, agent_ids, in));
    case FormulaNode::Kind::Imp:
      // a -> b  ==  !(a & !b)
      return in.negate(in.conj(ground_formula(f->a, env, props, agent_ids, in),
                               in.negate(ground_formula(f->b, env, props, agent_ids, in))));
    case FormulaNode::Kind::Know: {
      std::int64_t id = eval_expr(f->agent, env);
      bool known = std::binary_search(agent_ids.begin(), agent_ids.end(),
                                      static_cast<std::uint32_t>(id));
      if (id < 0 || !known)
        throw SpecError("knowledge operator names undeclared agent " + std::to_string(id));
      return in.know(static_cast<std::uint32_t>(id),
                     ground_formula(f->a, env, props, agent_ids, in));
    }
  }
  throw SpecError("bad formula node");
}

Formula formula_from_ground(EFormula f, const PropTable& props) {
  switch (f->kind) {
    case kepal::FormulaNode::Kind::True:
      return mk_true();
    case kepal::FormulaNode::Kind::Prop: {
      const auto& e = props.entries[f->prop];
      PropRef p{e.family, {}};
      for (auto v : e.indices) p.indices.push_back(mk_lit(v));
      return mk_prop(std::move(p));
    }
    case kepal::FormulaNode::Kind::Not:
      return mk_not(formula_from_ground(f->a, props));
    case kepal::FormulaNode::Kind::And:
      return mk_and(formula_from_ground(f->a, props), formula_from_ground(f->b, props));
    case kepal::FormulaNode::Kind::Know:
      return mk_know(mk_lit(f->agent), formula_from_ground(f->a, props));
  }
  throw SpecError("bad ground formula node");
}

}  // namespace kepal::ast
