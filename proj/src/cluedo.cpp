#include "kepal/cluedo.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace kepal::cluedo {

using namespace ast;

void Config::validate() const {
  if (cards == 0 || players == 0 || per_player == 0 || secret == 0)
    throw SpecError("cluedo configuration values must be positive");
  if (players != 2 && players != 3)
    throw SpecError("cluedo generator supports 2 or 3 players (show routing for more "
                    "players needs knowledge-guarded choice)");
  if (secret + players * per_player != cards)
    throw SpecError("cluedo configuration must satisfy secret + players*per_player = "
                    "cards; got " +
                    std::to_string(secret) + " + " + std::to_string(players) + "*" +
                    std::to_string(per_player) + " != " + std::to_string(cards));
}

FixedDeal parse_fixed_deal(const std::string& text, const Config& cfg) {
  FixedDeal deal;
  std::vector<std::vector<std::uint32_t>> groups(1);
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '|') {
      if (i < text.size()) groups.emplace_back();
      continue;
    }
    if (text[i] == ',') continue;
    if (!isdigit(static_cast<unsigned char>(text[i])))
      throw SpecError("fixed deal must look like \"1,2|3,4|5,6|7,8\"");
    std::uint32_t v = 0;
    while (i < text.size() && isdigit(static_cast<unsigned char>(text[i])))
      v = v * 10 + (text[i++] - '0');
    --i;
    groups.back().push_back(v);
  }
  if (groups.size() != cfg.players + 1)
    throw SpecError("fixed deal needs " + std::to_string(cfg.players + 1) +
                    " card groups (secret first), got " + std::to_string(groups.size()));
  std::set<std::uint32_t> seen;
  for (std::uint32_t card : groups[0]) seen.insert(card);
  deal.secret = groups[0];
  for (std::uint32_t j = 0; j < cfg.players; ++j) {
    deal.hands.push_back(groups[j + 1]);
    for (std::uint32_t card : groups[j + 1]) seen.insert(card);
  }
  if (deal.secret.size() != cfg.secret)
    throw SpecError("fixed deal secret group must have " + std::to_string(cfg.secret) +
                    " cards");
  for (const auto& h : deal.hands)
    if (h.size() != cfg.per_player)
      throw SpecError("each fixed deal hand must have " + std::to_string(cfg.per_player) +
                      " cards");
  if (seen.size() != cfg.cards || *seen.begin() < 1 || *seen.rbegin() > cfg.cards)
    throw SpecError("fixed deal must partition the cards 1.." + std::to_string(cfg.cards));
  return deal;
}

namespace {

Expr lit(std::int64_t v) { return mk_lit(v); }
Expr var(const std::string& n) { return mk_var(n); }

PropRef pprop(Expr card, std::int64_t player) {
  return PropRef{"p", {std::move(card), lit(player)}};
}
PropRef qprop(Expr card) { return PropRef{"q", {std::move(card)}}; }

Formula fprop(PropRef p) { return mk_prop(std::move(p)); }

/// i1 < i2 < ... plus `notin {excluded}` for every variable.
Constraint ascending_excluding(const std::vector<std::string>& vars,
                               const std::vector<Expr>& excluded) {
  Constraint c = mk_ctrue();
  auto add = [&](Constraint n) {
    c = c->kind == ConstraintNode::Kind::True ? n : mk_cand(std::move(c), std::move(n));
  };
  for (std::size_t i = 0; i + 1 < vars.size(); ++i)
    add(mk_cmp(ConstraintNode::Kind::Lt, var(vars[i]), var(vars[i + 1])));
  if (!excluded.empty())
    for (const auto& v : vars) add(mk_in(var(v), excluded, /*negated=*/true));
  return c;
}

Term chain(std::vector<Action> actions, Term tail) {
  Term t = std::move(tail);
  for (auto it = actions.rbegin(); it != actions.rend(); ++it) {
    std::vector<Summand> ss;
    ss.push_back(mk_guarded(std::move(*it), std::move(t)));
    t = mk_sum(std::move(ss));
  }
  return t;
}

Action set_act(PropRef target) {
  Action a;
  a.kind = Action::Kind::Set;
  a.name = "set";
  a.target = std::move(target);
  a.value = lit(1);
  return a;
}

Action out_act(std::string chan, std::vector<Expr> indices, Expr dest, Formula payload) {
  Action a;
  a.kind = Action::Kind::Output;
  a.name = std::move(chan);
  a.indices = std::move(indices);
  a.dest = std::move(dest);
  a.payload = std::move(payload);
  return a;
}

Action in_act(std::string chan, std::vector<Expr> indices, std::string y = "",
              std::string f = "") {
  Action a;
  a.kind = Action::Kind::Input;
  a.name = std::move(chan);
  a.indices = std::move(indices);
  a.bind_y = std::move(y);
  a.bind_f = std::move(f);
  return a;
}

/// Winning formula of a player given as an agent expression: the player
/// knows some candidate secret combination.
Formula phi_formula(const Config& cfg, Expr player) {
  std::vector<std::vector<std::uint32_t>> combos;
  std::vector<std::uint32_t> cur;
  std::function<void(std::uint32_t)> rec = [&](std::uint32_t from) {
    if (cur.size() == cfg.secret) {
      combos.push_back(cur);
      return;
    }
    for (std::uint32_t v = from; v <= cfg.cards; ++v) {
      cur.push_back(v);
      rec(v + 1);
      cur.pop_back();
    }
  };
  rec(1);

  Formula out;
  for (const auto& combo : combos) {
    Formula conj;
    for (std::uint32_t card : combo) {
      Formula p = fprop(qprop(lit(card)));
      conj = conj ? mk_and(std::move(conj), std::move(p)) : std::move(p);
    }
    Formula know = mk_know(player, std::move(conj));
    out = out ? mk_or(std::move(out), std::move(know)) : std::move(know);
  }
  return out;
}

std::vector<std::string> index_vars(const std::string& stem, std::uint32_t from,
                                    std::uint32_t count) {
  std::vector<std::string> vars;
  for (std::uint32_t r = 0; r < count; ++r)
    vars.push_back(stem + std::to_string(from + r));
  return vars;
}

/// Dealing blocks for players j.. as nested indexed sums; each block sets
/// the player's cards, tells her the hand, and continues with the next.
Term deal_block(const Config& cfg, std::uint32_t j, std::vector<Expr> excluded) {
  if (j == cfg.players) return mk_call("Play", {lit(0)});

  auto vars = index_vars("i", j * cfg.per_player + 1, cfg.per_player);
  std::vector<Action> acts;
  Formula hand;
  for (const auto& v : vars) {
    acts.push_back(set_act(pprop(var(v), j)));
    Formula p = fprop(pprop(var(v), j));
    hand = hand ? mk_and(std::move(hand), std::move(p)) : std::move(p);
  }
  acts.push_back(out_act("deal", {}, lit(j), std::move(hand)));

  std::vector<Expr> next_excluded = excluded;
  for (const auto& v : vars) next_excluded.push_back(var(v));

  Term cont = chain(std::move(acts), deal_block(cfg, j + 1, std::move(next_excluded)));
  // chain() built a one-summand term; reuse its head as the sum body.
  Summand body = cont->summands[0];
  std::vector<Summand> ss;
  ss.push_back(mk_indexed(vars, lit(1), lit(cfg.cards),
                          ascending_excluding(vars, excluded), std::move(body)));
  return mk_sum(std::move(ss));
}

ConstDef dealer_const(const Config& cfg) {
  ConstDef def;
  def.name = "Dealer";
  auto vars = index_vars("k", 1, cfg.secret);
  std::vector<Action> acts;
  for (const auto& v : vars) acts.push_back(set_act(qprop(var(v))));
  std::vector<Expr> args;
  for (const auto& v : vars) args.push_back(var(v));
  Term cont = chain(std::move(acts), mk_call("Deal", std::move(args)));
  std::vector<Summand> ss;
  ss.push_back(
      mk_indexed(vars, lit(1), lit(cfg.cards), ascending_excluding(vars, {}),
                 cont->summands[0]));
  def.body = mk_sum(std::move(ss));
  return def;
}

ConstDef fixed_dealer_const(const Config& cfg, const FixedDeal& deal) {
  ConstDef def;
  def.name = "Dealer";
  std::vector<Action> acts;
  for (std::uint32_t card : deal.secret) acts.push_back(set_act(qprop(lit(card))));
  for (std::uint32_t j = 0; j < cfg.players; ++j) {
    Formula hand;
    for (std::uint32_t card : deal.hands[j]) {
      acts.push_back(set_act(pprop(lit(card), j)));
      Formula p = fprop(pprop(lit(card), j));
      hand = hand ? mk_and(std::move(hand), std::move(p)) : std::move(p);
    }
    acts.push_back(out_act("deal", {}, lit(j), std::move(hand)));
  }
  def.body = chain(std::move(acts), mk_call("Play", {lit(0)}));
  return def;
}

ConstDef deal_const(const Config& cfg) {
  ConstDef def;
  def.name = "Deal";
  def.formals = index_vars("x", 1, cfg.secret);
  std::vector<Expr> excluded;
  for (const auto& x : def.formals) excluded.push_back(var(x));
  def.body = deal_block(cfg, 0, std::move(excluded));
  return def;
}

ConstDef play_const(const Config& cfg) {
  // Play(x) hands the turn to player x, then waits for the outcome.
  ConstDef def;
  def.name = "Play";
  def.formals = {"x"};
  std::vector<Summand> outcome;
  outcome.push_back(mk_guarded(
      in_act("end_turn", {}),
      mk_call("Play", {mk_bin(ExprNode::Op::Mod,
                              mk_bin(ExprNode::Op::Add, var("x"), lit(1)),
                              lit(cfg.players))})));
  outcome.push_back(mk_guarded(in_act("win", {}), mk_nil()));
  std::vector<Summand> ss;
  ss.push_back(mk_guarded(out_act("start_turn", {}, var("x"), mk_true()),
                          mk_sum(std::move(outcome))));
  def.body = mk_sum(std::move(ss));
  return def;
}

ConstDef player_const() {
  ConstDef def;
  def.name = "Player";
  def.formals = {"x"};
  std::vector<Summand> ss;
  ss.push_back(mk_guarded(in_act("deal", {}, "y"), mk_call("Turn", {var("x"), var("y")})));
  def.body = mk_sum(std::move(ss));
  return def;
}

/// The responder's reply to an ask about the cards bound by `vars`:
/// either some asked card is held (reveal one to the asker, and for three
/// players first tell the silent player that one of them is held), or none
/// is (share that with everyone involved).
Term respond_block(const Config& cfg, const std::vector<std::string>& vars, Term turn) {
  Formula has_one;
  Formula has_none;
  auto card_of = [&](const std::string& v) {
    return fprop(PropRef{"p", {var(v), var("x")}});
  };
  for (const auto& v : vars) {
    Formula p = card_of(v);
    has_one = has_one ? mk_or(std::move(has_one), std::move(p)) : std::move(p);
    Formula np = mk_not(card_of(v));
    has_none = has_none ? mk_and(std::move(has_none), std::move(np)) : std::move(np);
  }

  std::vector<Summand> reveal;
  for (const auto& v : vars)
    reveal.push_back(mk_guarded(out_act("show", {}, var("z"), card_of(v)), turn));

  if (cfg.players == 2) {
    std::vector<Summand> ss = std::move(reveal);
    ss.push_back(mk_guarded(out_act("show", {}, var("z"), has_none), turn));
    return mk_sum(std::move(ss));
  }

  // Three players: the silent one is 3 - x - z.
  Expr silent = mk_bin(ExprNode::Op::Sub, mk_bin(ExprNode::Op::Sub, lit(3), var("x")),
                       var("z"));
  std::vector<Summand> ss;
  ss.push_back(mk_guarded(out_act("show", {}, silent, has_one),
                          mk_sum(std::move(reveal))));
  std::vector<Summand> none_tail;
  none_tail.push_back(mk_guarded(out_act("show", {}, var("z"), has_none), turn));
  ss.push_back(mk_guarded(out_act("show", {}, silent, has_none),
                          mk_sum(std::move(none_tail))));
  return mk_sum(std::move(ss));
}

ConstDef turn_const(const Config& cfg) {
  ConstDef def;
  def.name = "Turn";
  def.formals = {"x", "y"};
  Term turn = mk_call("Turn", {var("x"), var("y")});
  auto vars = index_vars("a", 1, cfg.secret);

  // Own turn: ask every opponent about one candidate secret combination,
  // then either declare the win or pass the turn back.
  std::vector<Summand> outcome;
  outcome.push_back(
      mk_guarded(out_act("end_turn", {}, var("y"), mk_not(phi_formula(cfg, var("x")))),
                 turn));
  outcome.push_back(
      mk_guarded(out_act("win", {}, var("y"), phi_formula(cfg, var("x"))), mk_nil()));
  Term tail = mk_sum(std::move(outcome));
  std::vector<Expr> ask_idx;
  for (const auto& v : vars) ask_idx.push_back(var(v));
  for (std::uint32_t o = cfg.players - 1; o >= 1; --o) {
    Expr dest = mk_bin(ExprNode::Op::Mod, mk_bin(ExprNode::Op::Add, var("x"), lit(o)),
                       lit(cfg.players));
    std::vector<Action> pair;
    pair.push_back(out_act("ask", ask_idx, std::move(dest), mk_true()));
    pair.push_back(in_act("show", {}));
    tail = chain(std::move(pair), std::move(tail));
  }
  Summand asks = mk_indexed(vars, lit(1), lit(cfg.cards), ascending_excluding(vars, {}),
                            tail->summands[0]);

  std::vector<Summand> ss;
  std::vector<Summand> ask_sum;
  ask_sum.push_back(std::move(asks));
  ss.push_back(mk_guarded(in_act("start_turn", {}), mk_sum(std::move(ask_sum))));

  // Requests from other players.
  std::vector<Expr> ask_idx2;
  for (const auto& v : vars) ask_idx2.push_back(var(v));
  Summand respond = mk_indexed(
      vars, lit(1), lit(cfg.cards), ascending_excluding(vars, {}),
      mk_guarded(in_act("ask", ask_idx2, "z"), respond_block(cfg, vars, turn)));
  ss.push_back(std::move(respond));

  // Shows directed here during other players' turns.
  ss.push_back(mk_guarded(in_act("show", {}), turn));

  def.body = mk_sum(std::move(ss));
  return def;
}

}  // namespace

ast::SystemSpec build_system(const Config& cfg, const FixedDeal* fixed) {
  cfg.validate();
  SystemSpec spec;
  spec.props = PropTable::build({
      PropFamily{"p", {{1, cfg.cards}, {0, static_cast<std::int64_t>(cfg.players) - 1}}},
      PropFamily{"q", {{1, cfg.cards}}},
  });

  if (fixed)
    spec.consts.push_back(fixed_dealer_const(cfg, *fixed));
  else {
    spec.consts.push_back(dealer_const(cfg));
    spec.consts.push_back(deal_const(cfg));
  }
  spec.consts.push_back(play_const(cfg));
  spec.consts.push_back(player_const());
  spec.consts.push_back(turn_const(cfg));

  for (std::uint32_t j = 0; j < cfg.players; ++j) {
    AgentDecl a;
    a.id = j;
    a.init = mk_call("Player", {lit(j)});
    a.obs.kind = ObservesClause::Kind::Props;
    for (std::uint32_t card = 1; card <= cfg.cards; ++card)
      a.obs.props.push_back(
          spec.props.resolve("p", std::vector<std::int64_t>{card, j}));
    std::sort(a.obs.props.begin(), a.obs.props.end());
    spec.agents.push_back(std::move(a));
  }
  AgentDecl dealer;
  dealer.id = cfg.dealer_id();
  dealer.name = "dealer";
  dealer.init = mk_call("Dealer", {});
  dealer.obs.kind = ObservesClause::Kind::All;
  spec.agents.push_back(std::move(dealer));

  spec.init_mask = 0;

  ValidateOptions opts;
  opts.enforce_world_cap = false;  // loading enforces the cap; generation does not
  validate_system(spec, opts);
  return spec;
}

std::string system_text(const Config& cfg, const FixedDeal* fixed) {
  SystemSpec spec = build_system(cfg, fixed);
  std::string out = "# cluedo game: cards=" + std::to_string(cfg.cards) +
                    " players=" + std::to_string(cfg.players) +
                    " per-player=" + std::to_string(cfg.per_player) +
                    " secret=" + std::to_string(cfg.secret) + "\n";
  if (fixed) out += "# fixed deal\n";
  for (std::uint32_t j = 0; j < cfg.players; ++j)
    out += "# phi[" + std::to_string(j) + "] = " + phi_text(cfg, j) + "\n";
  out += "# win:      " + win_formula_text(cfg) + "\n";
  out += "# no-win:   " + unreach_formula_text(cfg) + "\n";
  out += print_system(spec);
  return out;
}

std::string phi_text(const Config& cfg, std::uint32_t player) {
  Formula f = phi_formula(cfg, lit(player));
  return print_formula(f);
}

std::string win_formula_text(const Config& cfg) {
  std::string out = "F (";
  for (std::uint32_t j = 0; j < cfg.players; ++j) {
    if (j) out += " | ";
    out += "(" + phi_text(cfg, j) + ")";
  }
  return out + ")";
}

std::string unreach_formula_text(const Config& cfg) {
  std::string out = "G (";
  for (std::uint32_t j = 0; j < cfg.players; ++j) {
    if (j) out += " & ";
    out += "!(" + phi_text(cfg, j) + ")";
  }
  return out + ")";
}

namespace {

std::uint64_t count_paths(const ast::Term& t, const SystemSpec& spec, const Env& env,
                          int depth) {
  if (depth > 64) throw SpecError("dealing phase does not terminate");
  switch (t->kind) {
    case TermNode::Kind::Nil:
      return 1;
    case TermNode::Kind::Call: {
      if (t->callee == "Play") return 1;
      const ConstDef* def = spec.find_const(t->callee);
      if (!def) throw SpecError("unknown constant " + t->callee);
      Bindings binds;
      for (std::size_t i = 0; i < def->formals.size(); ++i)
        binds[def->formals[i]] = eval_expr(t->args[i], env);
      return count_paths(substitute(def->body, binds), spec, env, depth + 1);
    }
    case TermNode::Kind::Sum: {
      std::uint64_t total = 0;
      for (const auto& s : t->summands) {
        if (s.kind == Summand::Kind::Guarded) {
          total += count_paths(s.cont, spec, env, depth);
        } else {
          for (const auto& br : expand_indexed_sum(s, env))
            total += count_paths(br.cont, spec, env, depth);
        }
      }
      return total;
    }
  }
  return 0;
}

}  // namespace

std::uint64_t deal_branch_count(const ast::SystemSpec& spec) {
  for (const auto& a : spec.agents)
    if (a.name == "dealer")
      return count_paths(a.init, spec, spec.global_env(), 0);
  throw SpecError("no dealer agent in the system");
}

std::uint64_t deal_branch_closed_form(const Config& cfg) {
  auto binom = [](std::uint64_t n, std::uint64_t k) {
    if (k > n) return std::uint64_t{0};
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  std::uint64_t total = binom(cfg.cards, cfg.secret);
  std::uint64_t left = cfg.cards - cfg.secret;
  for (std::uint32_t j = 0; j < cfg.players; ++j) {
    total *= binom(left, cfg.per_player);
    left -= cfg.per_player;
  }
  return total;
}

}  // namespace kepal::cluedo
