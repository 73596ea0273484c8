#include "kepal/parser.hpp"

#include <algorithm>

#include "lex.hpp"

namespace kepal {

using lex::Cursor;
using lex::Tok;
using namespace ast;

namespace {

class SysParser {
public:
  explicit SysParser(std::string_view text) : cur_(lex::tokenize(text)) {}

  LoadResult run(const ValidateOptions& opts) {
    parse_props();
    skip_boundary_dot();
    while (cur_.at(Tok::KwConst)) {
      parse_const();
      skip_boundary_dot();
    }
    cur_.expect(Tok::KwPool);
    cur_.expect(Tok::Colon);
    while (cur_.at(Tok::KwAgent)) {
      parse_agent();
      skip_boundary_dot();
    }
    if (cur_.accept(Tok::KwInit)) {
      cur_.expect(Tok::Colon);
      parse_init();
      skip_boundary_dot();
    }
    if (!cur_.at(Tok::Eof))
      cur_.fail("expected end of input, found " + Cursor::describe(cur_.peek()));

    std::stable_sort(spec_.agents.begin(), spec_.agents.end(),
                     [](const AgentDecl& a, const AgentDecl& b) { return a.id < b.id; });

    LoadResult out;
    out.warnings = validate_system(spec_, opts);
    out.spec = std::move(spec_);
    return out;
  }

private:
  // `.` doubles as an optional declaration terminator; it only ends a
  // declaration when a section keyword (or the end of input) follows.
  bool at_boundary_dot() const {
    if (!cur_.at(Tok::Dot)) return false;
    switch (cur_.peek(1).kind) {
      case Tok::KwConst:
      case Tok::KwPool:
      case Tok::KwInit:
      case Tok::KwProps:
      case Tok::KwAgent:
      case Tok::Eof:
        return true;
      default:
        return false;
    }
  }
  void skip_boundary_dot() {
    if (at_boundary_dot()) cur_.get();
  }

  static bool starts_branch(Tok k) {
    switch (k) {
      case Tok::Ident:
      case Tok::Number:
      case Tok::LParen:
      case Tok::KwSum:
      case Tok::KwSet:
        return true;
      default:
        return false;
    }
  }

  // ---- sections

  void parse_props() {
    cur_.expect(Tok::KwProps);
    cur_.expect(Tok::Colon);
    std::vector<PropFamily> fams;
    do {
      PropFamily f;
      f.name = cur_.expect(Tok::Ident, "proposition name").text;
      while (cur_.accept(Tok::LBracket)) {
        std::int64_t lo = cur_.expect(Tok::Number).number;
        cur_.expect(Tok::DotDot);
        std::int64_t hi = cur_.expect(Tok::Number).number;
        cur_.expect(Tok::RBracket);
        f.ranges.emplace_back(lo, hi);
      }
      fams.push_back(std::move(f));
    } while (cur_.accept(Tok::Comma));
    spec_.props = PropTable::build(std::move(fams));
  }

  void parse_const() {
    const auto& kw = cur_.expect(Tok::KwConst);
    ConstDef def;
    def.line = kw.line;
    def.col = kw.col;
    def.name = cur_.expect(Tok::Ident, "constant name").text;
    if (cur_.accept(Tok::LParen)) {
      do {
        def.formals.push_back(cur_.expect(Tok::Ident, "parameter name").text);
      } while (cur_.accept(Tok::Comma));
      cur_.expect(Tok::RParen);
    }
    cur_.expect(Tok::Assign);
    def.body = parse_term();
    spec_.consts.push_back(std::move(def));
  }

  void parse_agent() {
    const auto& kw = cur_.expect(Tok::KwAgent);
    AgentDecl a;
    a.line = kw.line;
    a.col = kw.col;
    if (cur_.at(Tok::Ident)) {
      a.name = cur_.get().text;
      cur_.expect(Tok::Eq);
      a.id = static_cast<std::uint32_t>(cur_.expect(Tok::Number, "agent id").number);
    } else {
      a.id = static_cast<std::uint32_t>(cur_.expect(Tok::Number, "agent id").number);
    }
    cur_.expect(Tok::Colon);
    a.init = parse_term();
    cur_.expect(Tok::KwObserves);
    if (cur_.accept(Tok::KwAll)) {
      a.obs.kind = ObservesClause::Kind::All;
    } else if (cur_.accept(Tok::KwNone)) {
      a.obs.kind = ObservesClause::Kind::None;
    } else {
      a.obs.kind = ObservesClause::Kind::Props;
      cur_.expect(Tok::LBrace);
      if (!cur_.at(Tok::RBrace)) {
        do {
          parse_obs_item(a.obs.props);
        } while (cur_.accept(Tok::Comma));
      }
      cur_.expect(Tok::RBrace);
      std::sort(a.obs.props.begin(), a.obs.props.end());
      a.obs.props.erase(std::unique(a.obs.props.begin(), a.obs.props.end()),
                        a.obs.props.end());
    }
    spec_.agents.push_back(std::move(a));
  }

  // An observed proposition, with `*` ranging over a whole index dimension.
  void parse_obs_item(std::vector<std::uint32_t>& out) {
    const auto& tok = cur_.expect(Tok::Ident, "proposition name");
    const PropFamily* fam = spec_.props.family(tok.text);
    if (!fam) throw SpecError("unknown proposition " + tok.text, tok.line, tok.col);
    std::vector<std::optional<std::int64_t>> idx;
    while (cur_.accept(Tok::LBracket)) {
      if (cur_.accept(Tok::Star))
        idx.push_back(std::nullopt);
      else
        idx.push_back(cur_.expect(Tok::Number).number);
      cur_.expect(Tok::RBracket);
    }
    if (idx.size() != fam->ranges.size())
      throw SpecError("proposition " + tok.text + " takes " +
                          std::to_string(fam->ranges.size()) + " indices",
                      tok.line, tok.col);
    std::vector<std::int64_t> lits(idx.size());
    std::function<void(std::size_t)> rec = [&](std::size_t d) {
      if (d == idx.size()) {
        out.push_back(spec_.props.resolve(tok.text, lits));
        return;
      }
      if (idx[d]) {
        lits[d] = *idx[d];
        rec(d + 1);
        return;
      }
      for (std::int64_t v = fam->ranges[d].first; v <= fam->ranges[d].second; ++v) {
        lits[d] = v;
        rec(d + 1);
      }
    };
    rec(0);
  }

  void parse_init() {
    cur_.expect(Tok::LBrace);
    if (!cur_.at(Tok::RBrace)) {
      do {
        const auto& tok = cur_.expect(Tok::Ident, "proposition name");
        std::vector<std::int64_t> idx;
        while (cur_.accept(Tok::LBracket)) {
          idx.push_back(cur_.expect(Tok::Number).number);
          cur_.expect(Tok::RBracket);
        }
        std::uint32_t k;
        try {
          k = spec_.props.resolve(tok.text, idx);
        } catch (SpecError& e) {
          throw SpecError(e.what(), tok.line, tok.col);
        }
        spec_.init_mask |= 1ull << k;
      } while (cur_.accept(Tok::Comma));
    }
    cur_.expect(Tok::RBrace);
  }

  // ---- expressions

  Expr parse_expr() {
    Expr e = parse_mul();
    while (cur_.at(Tok::Plus) || cur_.at(Tok::Minus)) {
      // `+` only continues an expression here; in term position it is the
      // choice operator, which never reaches this parser.
      auto op = cur_.get().kind == Tok::Plus ? ExprNode::Op::Add : ExprNode::Op::Sub;
      e = mk_bin(op, std::move(e), parse_mul());
    }
    return e;
  }
  Expr parse_mul() {
    Expr e = parse_expr_atom();
    while (cur_.at(Tok::Star) || cur_.at(Tok::KwMod)) {
      auto op = cur_.get().kind == Tok::Star ? ExprNode::Op::Mul : ExprNode::Op::Mod;
      e = mk_bin(op, std::move(e), parse_expr_atom());
    }
    return e;
  }
  Expr parse_expr_atom() {
    if (cur_.at(Tok::Number)) return mk_lit(cur_.get().number);
    if (cur_.at(Tok::Ident)) return mk_var(cur_.get().text);
    if (cur_.accept(Tok::LParen)) {
      Expr e = parse_expr();
      cur_.expect(Tok::RParen);
      return e;
    }
    cur_.fail("expected expression, found " + Cursor::describe(cur_.peek()));
  }

  // ---- formulas (specification layer)

  Formula parse_formula() { return parse_formula_imp(); }

  Formula parse_formula_imp() {
    Formula a = parse_formula_or();
    if (cur_.accept(Tok::Arrow)) return mk_imp(std::move(a), parse_formula_imp());
    return a;
  }
  Formula parse_formula_or() {
    Formula a = parse_formula_and();
    while (cur_.accept(Tok::Pipe)) a = mk_or(std::move(a), parse_formula_and());
    return a;
  }
  Formula parse_formula_and() {
    Formula a = parse_formula_unary();
    while (cur_.accept(Tok::Amp)) a = mk_and(std::move(a), parse_formula_unary());
    return a;
  }
  Formula parse_formula_unary() {
    if (cur_.accept(Tok::Bang)) return mk_not(parse_formula_unary());
    if (cur_.accept(Tok::KwK)) {
      cur_.expect(Tok::LBracket);
      Expr agent = parse_expr();
      cur_.expect(Tok::RBracket);
      return mk_know(std::move(agent), parse_formula_unary());
    }
    if (cur_.accept(Tok::KwTrue)) return mk_true();
    if (cur_.accept(Tok::LParen)) {
      Formula f = parse_formula_imp();
      cur_.expect(Tok::RParen);
      return f;
    }
    const auto& tok = cur_.expect(Tok::Ident, "formula");
    std::vector<Expr> idx;
    while (cur_.accept(Tok::LBracket)) {
      idx.push_back(parse_expr());
      cur_.expect(Tok::RBracket);
    }
    // Declared propositions win; anything else is a formula variable.
    if (!idx.empty() || spec_.props.family(tok.text))
      return mk_prop(PropRef{tok.text, std::move(idx)});
    return mk_fvar(tok.text);
  }

  // ---- constraints

  Constraint parse_constraint() {
    Constraint a = parse_constraint_and();
    while (cur_.accept(Tok::Pipe)) a = mk_cor(std::move(a), parse_constraint_and());
    return a;
  }
  Constraint parse_constraint_and() {
    Constraint a = parse_constraint_atom();
    while (cur_.accept(Tok::Amp)) a = mk_cand(std::move(a), parse_constraint_atom());
    return a;
  }
  Constraint parse_constraint_atom() {
    if (cur_.accept(Tok::Bang)) {
      cur_.expect(Tok::LParen);
      Constraint c = parse_constraint();
      cur_.expect(Tok::RParen);
      return mk_cnot(std::move(c));
    }
    // `(` may open a grouped constraint or a parenthesized expression;
    // try the comparison reading first and fall back.
    std::size_t save = cur_.save();
    if (cur_.at(Tok::LParen)) {
      try {
        return parse_comparison();
      } catch (const SpecError&) {
        cur_.restore(save);
        cur_.expect(Tok::LParen);
        Constraint c = parse_constraint();
        cur_.expect(Tok::RParen);
        return c;
      }
    }
    return parse_comparison();
  }
  Constraint parse_comparison() {
    Expr l = parse_expr();
    if (cur_.accept(Tok::Neq))
      return mk_cmp(ConstraintNode::Kind::Ne, std::move(l), parse_expr());
    if (cur_.accept(Tok::Lt))
      return mk_cmp(ConstraintNode::Kind::Lt, std::move(l), parse_expr());
    bool neg = cur_.at(Tok::KwNotin);
    if (cur_.accept(Tok::KwIn) || cur_.accept(Tok::KwNotin)) {
      cur_.expect(Tok::LBrace);
      std::vector<Expr> set;
      if (!cur_.at(Tok::RBrace)) {
        do {
          set.push_back(parse_expr());
        } while (cur_.accept(Tok::Comma));
      }
      cur_.expect(Tok::RBrace);
      return mk_in(std::move(l), std::move(set), neg);
    }
    cur_.fail("expected a comparison ('!=', '<', 'in', 'notin')");
  }

  // ---- process terms

  struct Element {
    bool is_summand = false;
    Summand summand;
    Term atom;
  };

  Term parse_term() {
    std::vector<Element> els;
    els.push_back(parse_element());
    while (cur_.accept(Tok::Plus)) els.push_back(parse_element());
    if (els.size() == 1) {
      if (els[0].is_summand) {
        std::vector<Summand> ss;
        ss.push_back(std::move(els[0].summand));
        return mk_sum(std::move(ss));
      }
      return els[0].atom;
    }
    std::vector<Summand> ss;
    ss.reserve(els.size());
    for (auto& e : els) {
      if (!e.is_summand)
        cur_.fail("every operand of '+' must be an action-guarded branch");
      ss.push_back(std::move(e.summand));
    }
    return mk_sum(std::move(ss));
  }

  Term parse_branch_cont() {
    Element e = parse_element();
    if (!e.is_summand) return e.atom;
    std::vector<Summand> ss;
    ss.push_back(std::move(e.summand));
    return mk_sum(std::move(ss));
  }

  Element parse_element() {
    Element out;
    if (cur_.at(Tok::KwSum)) {
      out.is_summand = true;
      out.summand = parse_indexed();
      return out;
    }
    if (cur_.at(Tok::KwSet)) {
      Action a = parse_set_action();
      cur_.expect(Tok::Dot, "'.' after action");
      out.is_summand = true;
      out.summand = mk_guarded(std::move(a), parse_branch_cont());
      return out;
    }
    if (cur_.at(Tok::Number)) {
      const auto& tok = cur_.get();
      if (tok.number != 0)
        throw SpecError("expected process term; the halted process is written 0",
                        tok.line, tok.col);
      out.atom = mk_nil();
      return out;
    }
    if (cur_.accept(Tok::LParen)) {
      out.atom = parse_term();
      cur_.expect(Tok::RParen);
      return out;
    }

    const auto& tok = cur_.expect(Tok::Ident, "process term");
    std::string name = tok.text;
    std::vector<Expr> indices;
    while (cur_.accept(Tok::LBracket)) {
      indices.push_back(parse_expr());
      cur_.expect(Tok::RBracket);
    }

    if (cur_.accept(Tok::Bang)) {
      cur_.expect(Tok::LParen);
      Action a;
      a.kind = Action::Kind::Output;
      a.name = std::move(name);
      a.indices = std::move(indices);
      a.dest = parse_expr();
      cur_.expect(Tok::Comma);
      a.payload = parse_formula();
      cur_.expect(Tok::RParen);
      cur_.expect(Tok::Dot, "'.' after action");
      out.is_summand = true;
      out.summand = mk_guarded(std::move(a), parse_branch_cont());
      return out;
    }
    if (cur_.accept(Tok::Question)) {
      cur_.expect(Tok::LParen);
      Action a;
      a.kind = Action::Kind::Input;
      a.name = std::move(name);
      a.indices = std::move(indices);
      a.bind_y = parse_binder();
      cur_.expect(Tok::Comma);
      a.bind_f = parse_binder();
      cur_.expect(Tok::RParen);
      cur_.expect(Tok::Dot, "'.' after action");
      out.is_summand = true;
      out.summand = mk_guarded(std::move(a), parse_branch_cont());
      return out;
    }
    if (indices.empty() && cur_.at(Tok::LParen)) {
      cur_.get();
      std::vector<Expr> args;
      if (!cur_.at(Tok::RParen)) {
        do {
          args.push_back(parse_expr());
        } while (cur_.accept(Tok::Comma));
      }
      cur_.expect(Tok::RParen);
      out.atom = mk_call(std::move(name), std::move(args));
      return out;
    }
    if (cur_.at(Tok::Dot) && starts_branch(cur_.peek(1).kind)) {
      cur_.get();
      Action a;
      a.kind = Action::Kind::Internal;
      a.name = std::move(name);
      a.indices = std::move(indices);
      out.is_summand = true;
      out.summand = mk_guarded(std::move(a), parse_branch_cont());
      return out;
    }
    if (!indices.empty())
      throw SpecError("indexed name " + name + " must be an action", tok.line, tok.col);
    out.atom = mk_call(std::move(name), {});
    return out;
  }

  std::string parse_binder() {
    if (cur_.accept(Tok::Underscore)) return "";
    return cur_.expect(Tok::Ident, "binder or '_'").text;
  }

  Action parse_set_action() {
    cur_.expect(Tok::KwSet);
    cur_.expect(Tok::LParen);
    Action a;
    a.kind = Action::Kind::Set;
    a.name = "set";
    a.target.name = cur_.expect(Tok::Ident, "proposition name").text;
    while (cur_.accept(Tok::LBracket)) {
      a.target.indices.push_back(parse_expr());
      cur_.expect(Tok::RBracket);
    }
    cur_.expect(Tok::Comma);
    a.value = parse_expr();
    cur_.expect(Tok::RParen);
    return a;
  }

  Summand parse_indexed() {
    cur_.expect(Tok::KwSum);
    std::vector<std::string> vars;
    do {
      vars.push_back(cur_.expect(Tok::Ident, "index variable").text);
    } while (cur_.accept(Tok::Comma));
    cur_.expect(Tok::Colon);
    Expr lo = parse_expr();
    cur_.expect(Tok::DotDot);
    Expr hi = parse_expr();
    Constraint where = mk_ctrue();
    if (cur_.accept(Tok::KwWhere)) where = parse_constraint();
    cur_.expect(Tok::Dot, "'.' after sum binder");
    Element body = parse_element();
    if (!body.is_summand)
      cur_.fail("the body of an indexed sum must be an action-guarded branch");
    return mk_indexed(std::move(vars), std::move(lo), std::move(hi), std::move(where),
                      std::move(body.summand));
  }

  Cursor cur_;
  SystemSpec spec_;
};

}  // namespace

LoadResult parse_system(std::string_view text, const ast::ValidateOptions& opts) {
  return SysParser(text).run(opts);
}

LoadResult parse_system(std::string_view text) {
  ast::ValidateOptions opts;
  opts.world_cap = ast::default_world_cap();
  return parse_system(text, opts);
}

}  // namespace kepal
