#include "kepal/formula.hpp"

#include <algorithm>

namespace kepal {

namespace {

std::vector<std::uint32_t> merge_agents(const std::vector<std::uint32_t>& x,
                                        const std::vector<std::uint32_t>& y) {
  std::vector<std::uint32_t> out;
  out.reserve(x.size() + y.size());
  std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

std::uint64_t node_key(const FormulaNode& n) {
  std::uint64_t h = kFnvOffset;
  h = hash_mix(h, static_cast<std::uint64_t>(n.kind));
  h = hash_mix(h, n.prop);
  h = hash_mix(h, n.agent);
  h = hash_mix(h, reinterpret_cast<std::uintptr_t>(n.a));
  h = hash_mix(h, reinterpret_cast<std::uintptr_t>(n.b));
  return h;
}

bool same_shape(const FormulaNode& x, const FormulaNode& y) {
  return x.kind == y.kind && x.prop == y.prop && x.agent == y.agent &&
         x.a == y.a && x.b == y.b;
}

}  // namespace

EFormula FormulaInterner::intern(FormulaNode n) {
  std::uint64_t key = node_key(n);
  auto& bucket = index_[key];
  for (EFormula e : bucket)
    if (same_shape(*e, n)) return e;
  nodes_.push_back(std::move(n));
  bucket.push_back(&nodes_.back());
  return &nodes_.back();
}

EFormula FormulaInterner::truth() {
  return intern(FormulaNode{FormulaNode::Kind::True, 0, 0, nullptr, nullptr, {}, 0});
}

EFormula FormulaInterner::prop(std::uint32_t k) {
  return intern(FormulaNode{FormulaNode::Kind::Prop, k, 0, nullptr, nullptr, {}, 0});
}

EFormula FormulaInterner::negate(EFormula f) {
  FormulaNode n{FormulaNode::Kind::Not, 0, 0, f, nullptr, f->agents, f->know_depth};
  return intern(std::move(n));
}

EFormula FormulaInterner::conj(EFormula a, EFormula b) {
  FormulaNode n{FormulaNode::Kind::And, 0, 0, a, b, merge_agents(a->agents, b->agents),
                std::max(a->know_depth, b->know_depth)};
  return intern(std::move(n));
}

EFormula FormulaInterner::know(std::uint32_t agent, EFormula f) {
  std::vector<std::uint32_t> ag = merge_agents(f->agents, {agent});
  FormulaNode n{FormulaNode::Kind::Know, 0, agent, f, nullptr, std::move(ag),
                f->know_depth + 1};
  return intern(std::move(n));
}

EFormula FormulaInterner::conj_all(std::span<const EFormula> fs) {
  if (fs.empty()) return truth();
  EFormula out = fs[0];
  for (std::size_t i = 1; i < fs.size(); ++i) out = conj(out, fs[i]);
  return out;
}

EFormula FormulaInterner::disj(EFormula a, EFormula b) {
  return negate(conj(negate(a), negate(b)));
}

std::string format_formula(EFormula f, std::span<const std::string> prop_names) {
  switch (f->kind) {
    case FormulaNode::Kind::True:
      return "true";
    case FormulaNode::Kind::Prop:
      return f->prop < prop_names.size() ? prop_names[f->prop]
                                         : "@" + std::to_string(f->prop);
    case FormulaNode::Kind::Not:
      return "!" + format_formula(f->a, prop_names);
    case FormulaNode::Kind::And:
      return "(" + format_formula(f->a, prop_names) + " & " +
             format_formula(f->b, prop_names) + ")";
    case FormulaNode::Kind::Know:
      return "K[" + std::to_string(f->agent) + "] " + format_formula(f->a, prop_names);
  }
  return "?";
}

}  // namespace kepal
