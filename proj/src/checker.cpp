#include "kepal/checker.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace kepal {

namespace {

std::vector<std::vector<std::uint32_t>> reverse_adjacency(const KltsGraph& g) {
  std::vector<std::vector<std::uint32_t>> rev(g.n_states());
  for (const auto& t : g.trans) rev[t.dst].push_back(t.src);
  return rev;
}

StateSet epistemic_states(const KltsGraph& g, EFormula f, SatMemo* memo) {
  const std::int64_t n = g.n_states();
  StateSet out(static_cast<std::uint32_t>(n));
  std::vector<std::uint8_t> hit(n, 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64) if (n >= 256)
#endif
  for (std::int64_t s = 0; s < n; ++s) {
    KripkeModel m = g.model_of(static_cast<std::uint32_t>(s));
    hit[s] = holds_at(m, g.states[s].x, f, memo) ? 1 : 0;
  }
  for (std::int64_t s = 0; s < n; ++s)
    if (hit[s]) out.set(static_cast<std::uint32_t>(s));
  return out;
}

// Least fixpoint of X = seed | pre(X): backward reachability.
StateSet backward_reach(const KltsGraph& g, const StateSet& seed) {
  StateSet out = seed;
  auto rev = reverse_adjacency(g);
  std::deque<std::uint32_t> work;
  seed.for_each([&](std::uint32_t s) { work.push_back(s); });
  while (!work.empty()) {
    std::uint32_t s = work.front();
    work.pop_front();
    for (std::uint32_t p : rev[s]) {
      if (out.test(p)) continue;
      out.set(p);
      work.push_back(p);
    }
  }
  return out;
}

// Greatest fixpoint of X = seed & pre(X): prune states whose successors
// all left X, by successor counting.
StateSet infinite_stay(const KltsGraph& g, const StateSet& seed) {
  const std::uint32_t n = g.n_states();
  StateSet x = seed;
  std::vector<std::uint32_t> cnt(n, 0);
  for (const auto& t : g.trans)
    if (x.test(t.src) && x.test(t.dst)) ++cnt[t.src];
  auto rev = reverse_adjacency(g);
  std::deque<std::uint32_t> dead;
  x.for_each([&](std::uint32_t s) {
    if (cnt[s] == 0) dead.push_back(s);
  });
  while (!dead.empty()) {
    std::uint32_t s = dead.front();
    dead.pop_front();
    if (!x.test(s)) continue;
    x.set(s, false);
    for (std::uint32_t p : rev[s]) {
      if (!x.test(p)) continue;
      if (cnt[p] > 0 && --cnt[p] == 0) dead.push_back(p);
    }
  }
  return x;
}

}  // namespace

StateSet sat_states(const KltsGraph& g, const KtFormula& f, SatMemo* memo) {
  const std::uint32_t n = g.n_states();
  switch (f->kind) {
    case KtNode::Kind::True:
      return StateSet::full(n);
    case KtNode::Kind::Prop: {
      StateSet out(n);
      for (std::uint32_t s = 0; s < n; ++s)
        if (g.states[s].x >> f->prop & 1) out.set(s);
      return out;
    }
    case KtNode::Kind::Not: {
      StateSet out = sat_states(g, f->a, memo);
      out.complement();
      return out;
    }
    case KtNode::Kind::And: {
      StateSet out = sat_states(g, f->a, memo);
      out &= sat_states(g, f->b, memo);
      return out;
    }
    case KtNode::Kind::Diamond: {
      StateSet inner = sat_states(g, f->a, memo);
      StateSet out(n);
      for (const auto& t : g.trans)
        if (f->pat.matches(t.label) && inner.test(t.dst)) out.set(t.src);
      return out;
    }
    case KtNode::Kind::Epistemic:
      return epistemic_states(g, f->epi, memo);
    case KtNode::Kind::Ev:
      return backward_reach(g, sat_states(g, f->a, memo));
    case KtNode::Kind::Glob:
      return infinite_stay(g, sat_states(g, f->a, memo));
  }
  return StateSet(n);
}

bool check(const KltsGraph& g, std::uint32_t s, const KtFormula& f, SatMemo* memo) {
  if (s >= g.n_states())
    throw SpecError("unknown state id " + std::to_string(s));
  return sat_states(g, f, memo).test(s);
}

std::vector<std::uint32_t> Witness::state_seq() const {
  std::vector<std::uint32_t> seq;
  seq.reserve(steps.size() + 1);
  for (const auto& [s, l] : steps) seq.push_back(s);
  seq.push_back(final_state);
  return seq;
}

namespace {

const char* kind_name(KtNode::Kind k) {
  switch (k) {
    case KtNode::Kind::True: return "true";
    case KtNode::Kind::Prop: return "proposition";
    case KtNode::Kind::Not: return "negation";
    case KtNode::Kind::And: return "conjunction";
    case KtNode::Kind::Diamond: return "diamond";
    case KtNode::Kind::Epistemic: return "epistemic formula";
    case KtNode::Kind::Ev: return "F";
    case KtNode::Kind::Glob: return "G";
  }
  return "?";
}

// Shortest path from s into `target` over any labels; empty when s is
// already inside.
Witness shortest_path(const KltsGraph& g, std::uint32_t s, const StateSet& target) {
  Witness w;
  w.start = s;
  if (target.test(s)) {
    w.kind = Witness::Kind::State;
    w.final_state = s;
    return w;
  }
  const std::uint32_t n = g.n_states();
  std::vector<std::int64_t> from(n, -1);
  std::vector<const KltsTransition*> via(n, nullptr);
  std::deque<std::uint32_t> q{s};
  from[s] = s;
  std::int64_t found = -1;
  while (!q.empty() && found < 0) {
    std::uint32_t cur = q.front();
    q.pop_front();
    for (const auto& t : g.out(cur)) {
      if (from[t.dst] >= 0) continue;
      from[t.dst] = cur;
      via[t.dst] = &t;
      if (target.test(t.dst)) {
        found = t.dst;
        break;
      }
      q.push_back(t.dst);
    }
  }
  if (found < 0) {
    w.kind = Witness::Kind::Refutation;
    w.note = "target set unreachable";
    return w;
  }
  std::vector<std::pair<std::uint32_t, Label>> rev;
  for (std::uint32_t cur = static_cast<std::uint32_t>(found); cur != s;
       cur = static_cast<std::uint32_t>(from[cur]))
    rev.emplace_back(static_cast<std::uint32_t>(from[cur]), via[cur]->label);
  w.kind = Witness::Kind::Path;
  w.steps.assign(rev.rbegin(), rev.rend());
  w.final_state = static_cast<std::uint32_t>(found);
  return w;
}

}  // namespace

Witness witness(const KltsGraph& g, std::uint32_t s, const KtFormula& f, SatMemo* memo) {
  Witness w;
  w.start = s;
  if (!check(g, s, f, memo)) {
    w.kind = Witness::Kind::Refutation;
    w.final_state = s;
    w.note = std::string("state ") + std::to_string(s) + " fails the top-level " +
             kind_name(f->kind) + " clause";
    return w;
  }

  switch (f->kind) {
    case KtNode::Kind::Diamond: {
      StateSet inner = sat_states(g, f->a, memo);
      for (const auto& t : g.out(s)) {
        if (!f->pat.matches(t.label) || !inner.test(t.dst)) continue;
        w.kind = Witness::Kind::Path;
        w.steps.emplace_back(s, t.label);
        w.final_state = t.dst;
        return w;
      }
      break;  // unreachable: the claim held
    }
    case KtNode::Kind::Ev:
      return shortest_path(g, s, sat_states(g, f->a, memo));
    case KtNode::Kind::Glob: {
      StateSet live = sat_states(g, f, memo);
      // Every live state keeps a live successor; walk until a repeat.
      std::vector<std::int64_t> visited_at(g.n_states(), -1);
      std::uint32_t cur = s;
      while (visited_at[cur] < 0) {
        visited_at[cur] = static_cast<std::int64_t>(w.steps.size());
        bool advanced = false;
        for (const auto& t : g.out(cur)) {
          if (!live.test(t.dst)) continue;
          w.steps.emplace_back(cur, t.label);
          cur = t.dst;
          advanced = true;
          break;
        }
        if (!advanced)
          throw std::logic_error("greatest fixpoint kept a state with no live successor");
      }
      w.kind = Witness::Kind::Lasso;
      w.final_state = cur;
      w.cycle_start = static_cast<std::size_t>(visited_at[cur]);
      return w;
    }
    default:
      break;
  }
  w.kind = Witness::Kind::State;
  w.final_state = s;
  return w;
}

namespace {

bool has_transition(const KltsGraph& g, std::uint32_t src, const Label& l,
                    std::uint32_t dst) {
  for (const auto& t : g.out(src))
    if (t.dst == dst && t.label == l) return true;
  return false;
}

}  // namespace

bool replay_witness(const KltsGraph& g, std::uint32_t s, const KtFormula& f,
                    const Witness& w, SatMemo* memo) {
  if (w.start != s) return false;
  switch (w.kind) {
    case Witness::Kind::None:
      return false;
    case Witness::Kind::Refutation:
      return !check(g, s, f, memo);
    case Witness::Kind::State:
      return w.final_state == s && check(g, s, f, memo);
    case Witness::Kind::Path: {
      auto seq = w.state_seq();
      if (seq.front() != s) return false;
      for (std::size_t i = 0; i < w.steps.size(); ++i)
        if (!has_transition(g, seq[i], w.steps[i].second, seq[i + 1])) return false;
      if (f->kind == KtNode::Kind::Ev)
        return check(g, w.final_state, f->a, memo);
      if (f->kind == KtNode::Kind::Diamond)
        return w.steps.size() == 1 && f->pat.matches(w.steps[0].second) &&
               check(g, w.final_state, f->a, memo);
      return false;
    }
    case Witness::Kind::Lasso: {
      if (f->kind != KtNode::Kind::Glob) return false;
      auto seq = w.state_seq();
      if (seq.front() != s) return false;
      if (w.cycle_start >= w.steps.size()) return false;
      if (seq.back() != seq[w.cycle_start]) return false;
      for (std::size_t i = 0; i < w.steps.size(); ++i)
        if (!has_transition(g, seq[i], w.steps[i].second, seq[i + 1])) return false;
      // Every state on the lasso satisfies the body, so tracing the cycle
      // forever certifies the claim.
      StateSet body = sat_states(g, f->a, memo);
      for (std::uint32_t st : seq)
        if (!body.test(st)) return false;
      return true;
    }
  }
  return false;
}

std::string format_witness(const Witness& w) {
  switch (w.kind) {
    case Witness::Kind::None:
      return "none";
    case Witness::Kind::Refutation:
      return "refuted: " + (w.note.empty() ? "false at the state" : w.note);
    case Witness::Kind::State:
      return "state " + std::to_string(w.final_state);
    case Witness::Kind::Path:
    case Witness::Kind::Lasso: {
      std::string out = std::to_string(w.start);
      auto seq = w.state_seq();
      for (std::size_t i = 0; i < w.steps.size(); ++i) {
        if (w.kind == Witness::Kind::Lasso && i == w.cycle_start) out += " [cycle:";
        out += " -" + w.steps[i].second.str() + "-> " + std::to_string(seq[i + 1]);
      }
      if (w.kind == Witness::Kind::Lasso) out += "]";
      return out;
    }
  }
  return "none";
}

}  // namespace kepal
