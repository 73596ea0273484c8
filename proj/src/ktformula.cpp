#include "kepal/ktformula.hpp"

#include <algorithm>
#include <map>

#include "lex.hpp"

namespace kepal {

using lex::Cursor;
using lex::Tok;

namespace {
KtFormula mk(KtNode n) { return std::make_shared<KtNode>(std::move(n)); }
}  // namespace

KtFormula kt_true() {
  KtNode n;
  n.kind = KtNode::Kind::True;
  return mk(std::move(n));
}
KtFormula kt_prop(std::uint32_t k) {
  KtNode n;
  n.kind = KtNode::Kind::Prop;
  n.prop = k;
  return mk(std::move(n));
}
KtFormula kt_not(KtFormula f) {
  KtNode n;
  n.kind = KtNode::Kind::Not;
  n.a = std::move(f);
  return mk(std::move(n));
}
KtFormula kt_and(KtFormula a, KtFormula b) {
  KtNode n;
  n.kind = KtNode::Kind::And;
  n.a = std::move(a);
  n.b = std::move(b);
  return mk(std::move(n));
}
KtFormula kt_diamond(LabelPattern pat, KtFormula f) {
  KtNode n;
  n.kind = KtNode::Kind::Diamond;
  n.pat = std::move(pat);
  n.a = std::move(f);
  return mk(std::move(n));
}
KtFormula kt_epistemic(EFormula f) {
  KtNode n;
  n.kind = KtNode::Kind::Epistemic;
  n.epi = f;
  return mk(std::move(n));
}
KtFormula kt_eventually(KtFormula f) {
  KtNode n;
  n.kind = KtNode::Kind::Ev;
  n.a = std::move(f);
  return mk(std::move(n));
}
KtFormula kt_globally(KtFormula f) {
  KtNode n;
  n.kind = KtNode::Kind::Glob;
  n.a = std::move(f);
  return mk(std::move(n));
}

namespace {

class KtParser {
public:
  KtParser(std::string_view text, const KltsMeta& meta, FormulaInterner& formulas)
      : cur_(lex::tokenize(text)), meta_(meta), formulas_(formulas) {
    for (std::uint32_t k = 0; k < meta.prop_names.size(); ++k)
      props_[meta.prop_names[k]] = k;
  }

  KtFormula run() {
    KtFormula f = parse_imp();
    if (!cur_.at(Tok::Eof))
      cur_.fail("expected end of formula, found " + Cursor::describe(cur_.peek()));
    return f;
  }

private:
  // ---- temporal layer

  KtFormula parse_imp() {
    KtFormula a = parse_or();
    if (cur_.accept(Tok::Arrow)) {
      // a -> b  ==  !(a & !b)
      KtFormula b = parse_imp();
      return kt_not(kt_and(std::move(a), kt_not(std::move(b))));
    }
    return a;
  }
  KtFormula parse_or() {
    KtFormula a = parse_and();
    while (cur_.accept(Tok::Pipe)) {
      KtFormula b = parse_and();
      a = kt_not(kt_and(kt_not(std::move(a)), kt_not(std::move(b))));
    }
    return a;
  }
  KtFormula parse_and() {
    KtFormula a = parse_unary();
    while (cur_.accept(Tok::Amp)) a = kt_and(std::move(a), parse_unary());
    return a;
  }

  KtFormula parse_unary() {
    if (cur_.accept(Tok::Bang)) return kt_not(parse_unary());
    if (cur_.at(Tok::KwK)) return kt_epistemic(parse_epi_unary());
    if (cur_.accept(Tok::Lt)) {
      // `<->` tokenizes as '<' '->': the arrow is the wildcard plus '>'
      if (cur_.accept(Tok::Arrow))
        return kt_diamond(LabelPattern{true, {}}, parse_unary());
      LabelPattern pat = parse_label();
      cur_.expect(Tok::Gt);
      return kt_diamond(std::move(pat), parse_unary());
    }
    if (cur_.at(Tok::Ident) && cur_.peek().text == "F" && !props_.count("F")) {
      cur_.get();
      return kt_eventually(parse_unary());
    }
    if (cur_.at(Tok::Ident) && cur_.peek().text == "G" && !props_.count("G")) {
      cur_.get();
      return kt_globally(parse_unary());
    }
    if (cur_.accept(Tok::KwTrue)) return kt_true();
    if (cur_.accept(Tok::LParen)) {
      KtFormula f = parse_imp();
      cur_.expect(Tok::RParen);
      return f;
    }
    return kt_prop(parse_prop());
  }

  LabelPattern parse_label() {
    LabelPattern pat;
    if (cur_.accept(Tok::Minus)) {
      pat.any = true;
      return pat;
    }
    if (cur_.at(Tok::Ident) && cur_.peek().text == "tau") {
      cur_.get();
      pat.label = Label::make_tau();
      return pat;
    }
    std::uint32_t agent =
        static_cast<std::uint32_t>(cur_.expect(Tok::Number, "agent id").number);
    cur_.expect(Tok::Dot);
    std::string name = cur_.expect(Tok::Ident, "action name").text;
    while (cur_.accept(Tok::LBracket)) {
      name += "[" + std::to_string(cur_.expect(Tok::Number).number) + "]";
      cur_.expect(Tok::RBracket);
    }
    pat.label = Label::visible(agent, std::move(name));
    return pat;
  }

  // ---- epistemic layer (no temporal operators below K)

  EFormula parse_epi_imp() {
    EFormula a = parse_epi_or();
    if (cur_.accept(Tok::Arrow)) {
      EFormula b = parse_epi_imp();
      return formulas_.negate(formulas_.conj(a, formulas_.negate(b)));
    }
    return a;
  }
  EFormula parse_epi_or() {
    EFormula a = parse_epi_and();
    while (cur_.accept(Tok::Pipe)) a = formulas_.disj(a, parse_epi_and());
    return a;
  }
  EFormula parse_epi_and() {
    EFormula a = parse_epi_unary();
    while (cur_.accept(Tok::Amp)) a = formulas_.conj(a, parse_epi_unary());
    return a;
  }
  EFormula parse_epi_unary() {
    if (cur_.accept(Tok::Bang)) return formulas_.negate(parse_epi_unary());
    if (cur_.accept(Tok::KwK)) {
      cur_.expect(Tok::LBracket);
      const auto& tok = cur_.expect(Tok::Number, "agent id");
      cur_.expect(Tok::RBracket);
      std::uint32_t id = static_cast<std::uint32_t>(tok.number);
      if (!std::binary_search(meta_.agent_ids.begin(), meta_.agent_ids.end(), id))
        throw SpecError("unknown agent " + std::to_string(id), tok.line, tok.col);
      return formulas_.know(id, parse_epi_unary());
    }
    if (cur_.accept(Tok::KwTrue)) return formulas_.truth();
    if (cur_.accept(Tok::LParen)) {
      EFormula f = parse_epi_imp();
      cur_.expect(Tok::RParen);
      return f;
    }
    return formulas_.prop(parse_prop());
  }

  std::uint32_t parse_prop() {
    const auto& tok = cur_.expect(Tok::Ident, "proposition");
    std::string name = tok.text;
    while (cur_.accept(Tok::LBracket)) {
      name += "[" + std::to_string(cur_.expect(Tok::Number).number) + "]";
      cur_.expect(Tok::RBracket);
    }
    auto it = props_.find(name);
    if (it == props_.end())
      throw SpecError("unknown proposition " + name, tok.line, tok.col);
    return it->second;
  }

  Cursor cur_;
  const KltsMeta& meta_;
  FormulaInterner& formulas_;
  std::map<std::string, std::uint32_t> props_;
};

}  // namespace

KtFormula parse_kt_formula(std::string_view text, const KltsMeta& meta,
                           FormulaInterner& formulas) {
  return KtParser(text, meta, formulas).run();
}

std::string format_kt(const KtFormula& f, std::span<const std::string> prop_names) {
  switch (f->kind) {
    case KtNode::Kind::True:
      return "true";
    case KtNode::Kind::Prop:
      return f->prop < prop_names.size() ? prop_names[f->prop]
                                         : "@" + std::to_string(f->prop);
    case KtNode::Kind::Not:
      return "!" + format_kt(f->a, prop_names);
    case KtNode::Kind::And:
      return "(" + format_kt(f->a, prop_names) + " & " + format_kt(f->b, prop_names) + ")";
    case KtNode::Kind::Diamond:
      return "<" + f->pat.str() + "> " + format_kt(f->a, prop_names);
    case KtNode::Kind::Epistemic:
      return format_formula(f->epi, prop_names);
    case KtNode::Kind::Ev:
      return "F " + format_kt(f->a, prop_names);
    case KtNode::Kind::Glob:
      return "G " + format_kt(f->a, prop_names);
  }
  return "?";
}

}  // namespace kepal
