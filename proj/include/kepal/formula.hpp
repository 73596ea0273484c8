#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kepal/util.hpp"

namespace kepal {

/// Epistemic formula over flat proposition positions and concrete agent
/// ids: True | Prop k | Not | And | Know. Nodes are hash-consed by a
/// FormulaInterner, so pointer equality is structural equality and nodes
/// can key caches directly.
struct FormulaNode {
  enum class Kind : std::uint8_t { True, Prop, Not, And, Know };

  Kind kind;
  std::uint32_t prop = 0;   // Kind::Prop
  std::uint32_t agent = 0;  // Kind::Know: concrete agent id
  const FormulaNode* a = nullptr;
  const FormulaNode* b = nullptr;

  /// Sorted ids of all agents whose relations the formula reads.
  std::vector<std::uint32_t> agents;
  std::uint32_t know_depth = 0;
};

using EFormula = const FormulaNode*;

class FormulaInterner {
public:
  EFormula truth();
  EFormula prop(std::uint32_t k);
  EFormula negate(EFormula f);
  EFormula conj(EFormula a, EFormula b);
  EFormula know(std::uint32_t agent, EFormula f);

  /// Convenience: conjunction / disjunction over a list (empty list = true
  /// for conj; disjunction desugars through negation).
  EFormula conj_all(std::span<const EFormula> fs);
  EFormula disj(EFormula a, EFormula b);

  std::size_t size() const { return nodes_.size(); }

private:
  EFormula intern(FormulaNode n);

  std::deque<FormulaNode> nodes_;
  std::unordered_map<std::uint64_t, std::vector<EFormula>> index_;
};

/// Canonical text using the formula grammar of the command line:
/// `true`, prop names, `!f`, `(f & f)`, `K[i] f`.
std::string format_formula(EFormula f, std::span<const std::string> prop_names);

}  // namespace kepal
