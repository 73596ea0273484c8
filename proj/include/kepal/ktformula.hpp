#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "kepal/pool.hpp"

namespace kepal {

/// Label pattern of a diamond: an exact transition label or the wildcard
/// `-` matching any label.
struct LabelPattern {
  bool any = false;
  Label label;

  bool matches(const Label& l) const { return any || label == l; }
  std::string str() const { return any ? "-" : label.str(); }
};

/// Two-layer temporal-epistemic formula. The epistemic layer embeds as a
/// whole subtree; no temporal operator occurs below a knowledge operator.
struct KtNode;
using KtFormula = std::shared_ptr<const KtNode>;

struct KtNode {
  enum class Kind : std::uint8_t { True, Prop, Not, And, Diamond, Epistemic, Ev, Glob };

  Kind kind;
  std::uint32_t prop = 0;   // Prop
  LabelPattern pat;         // Diamond
  EFormula epi = nullptr;   // Epistemic
  KtFormula a, b;
};

KtFormula kt_true();
KtFormula kt_prop(std::uint32_t k);
KtFormula kt_not(KtFormula f);
KtFormula kt_and(KtFormula a, KtFormula b);
KtFormula kt_diamond(LabelPattern pat, KtFormula f);
KtFormula kt_epistemic(EFormula f);
KtFormula kt_eventually(KtFormula f);
KtFormula kt_globally(KtFormula f);

/// Parses the command-line formula grammar:
///   true | p[2][0] | !f | f & f | f \| f | f -> f | K[1] f
///   | <tau> f | <1.b> f | <-> f | F f | G f
/// Proposition names resolve against meta's flat names; K switches to the
/// purely epistemic layer. Diagnostics carry positions via SpecError.
KtFormula parse_kt_formula(std::string_view text, const KltsMeta& meta,
                           FormulaInterner& formulas);

std::string format_kt(const KtFormula& f, std::span<const std::string> prop_names);

}  // namespace kepal
