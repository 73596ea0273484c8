#include "doctest.h"

#include "kepal/checker.hpp"
#include "kepal/parser.hpp"

using namespace kepal;

namespace {

struct Fixture {
  ast::SystemSpec spec;
  KltsGraph graph;
  FormulaInterner formulas;

  explicit Fixture(const char* src) {
    spec = parse_system(src).spec;
    graph = explore(spec).graph;
  }
  KtFormula f(const char* text) { return parse_kt_formula(text, *graph.meta, formulas); }
};

}  // namespace

TEST_CASE("formula parsing round and errors") {
  Fixture fx(R"(
props: p[1..2], q
pool:
agent 0 : b.0 observes all
agent 1 : 0 observes none
init: {}
)");
  auto names = fx.graph.meta->prop_names;
  CHECK(format_kt(fx.f("true"), names) == "true");
  CHECK(format_kt(fx.f("p[2] & !q"), names) == "(p[2] & !q)");
  CHECK(format_kt(fx.f("K[1] (p[1] | q)"), names) == "K[1] !(!p[1] & !q)");
  CHECK(format_kt(fx.f("<0.b> F p[1]"), names) == "<0.b> F p[1]");
  CHECK(format_kt(fx.f("<-> G true"), names) == "<-> G true");
  CHECK(format_kt(fx.f("<tau> true"), names) == "<tau> true");

  CHECK_THROWS_WITH_AS(fx.f("p[3]"), doctest::Contains("unknown proposition"), SpecError);
  CHECK_THROWS_WITH_AS(fx.f("K[4] q"), doctest::Contains("unknown agent"), SpecError);
  CHECK_THROWS_AS(fx.f("p[1] &"), SpecError);
  CHECK_THROWS_AS(fx.f("p[1] q"), SpecError);
}

TEST_CASE("clause semantics on a tiny chain") {
  // 0 --tau--> 1 --tau--> 2 (deadlock), p set at state 1
  Fixture fx(R"(
props: p
const C := set(p, 1).set(p, 0).0
pool:
agent 0 : C observes all
init: {}
)");
  const auto& g = fx.graph;
  REQUIRE(g.n_states() == 3);

  CHECK(check(g, 0, fx.f("true")));
  CHECK(!check(g, 0, fx.f("p")));
  CHECK(check(g, 1, fx.f("p")));
  CHECK(check(g, 0, fx.f("<tau> p")));
  CHECK(!check(g, 0, fx.f("<0.b> true")));
  CHECK(check(g, 0, fx.f("F !p & !K[0] p")));
  CHECK(check(g, 1, fx.f("K[0] p")));

  // deadlock chains never satisfy G
  CHECK(sat_states(g, fx.f("G true")).none());
  CHECK_THROWS_AS(check(g, 99, fx.f("true")), SpecError);
}

TEST_CASE("diamond patterns select labels exactly") {
  Fixture fx(R"(
props: p
pool:
agent 0 : b.0 observes none
agent 1 : c.0 observes none
init: {}
)");
  const auto& g = fx.graph;
  CHECK(check(g, 0, fx.f("<0.b> true")));
  CHECK(check(g, 0, fx.f("<1.c> true")));
  CHECK(!check(g, 0, fx.f("<tau> true")));
  CHECK(check(g, 0, fx.f("<-> <-> true")));
  CHECK(!check(g, 0, fx.f("<0.b> <0.b> true")));
}

TEST_CASE("greatest fixpoint needs an infinite path") {
  Fixture fx(R"(
props: p
const C := b.C
pool:
agent 0 : C observes all
init: {}
)");
  CHECK(check(fx.graph, 0, fx.f("G true")));
  Witness w = witness(fx.graph, 0, fx.f("G true"));
  CHECK(w.kind == Witness::Kind::Lasso);
  CHECK(w.cycle_start == 0);
  CHECK(replay_witness(fx.graph, 0, fx.f("G true"), w));
}

TEST_CASE("duality and fixpoint bounds on a branching system") {
  Fixture fx(R"(
props: p, q
const A := set(p, 1).A + b.set(q, 1).0 + c.0
pool:
agent 0 : A observes all
init: {}
)");
  const auto& g = fx.graph;
  auto f_p = fx.f("F p");
  auto no_p_reach = fx.f("!F p");
  StateSet s1 = sat_states(g, f_p);
  StateSet s2 = sat_states(g, no_p_reach);
  CHECK((s1 & s2).none());
  CHECK((s1 | s2) == StateSet::full(g.n_states()));

  // F is reflexive-expanding, G contracts
  StateSet p = sat_states(g, fx.f("p"));
  CHECK(p.subset_of(sat_states(g, f_p)));
  CHECK(sat_states(g, fx.f("G p")).subset_of(p));
}

TEST_CASE("witnesses replay") {
  Fixture fx(R"(
props: p, q
const A := b.set(p, 1).A + c.0
pool:
agent 0 : A observes all
init: {}
)");
  const auto& g = fx.graph;

  auto fp = fx.f("F p");
  Witness wf = witness(g, 0, fp);
  CHECK(wf.kind == Witness::Kind::Path);
  CHECK(replay_witness(g, 0, fp, wf));
  // shortest: b then tau(set)
  CHECK(wf.steps.size() == 2);

  auto dia = fx.f("<0.c> true");
  Witness wd = witness(g, 0, dia);
  CHECK(wd.kind == Witness::Kind::Path);
  CHECK(replay_witness(g, 0, dia, wd));

  auto glob = fx.f("G !q");
  REQUIRE(check(g, 0, glob));
  Witness wg = witness(g, 0, glob);
  CHECK(wg.kind == Witness::Kind::Lasso);
  CHECK(replay_witness(g, 0, glob, wg));

  auto refut = fx.f("G q");
  Witness wr = witness(g, 0, refut);
  CHECK(wr.kind == Witness::Kind::Refutation);
  CHECK(replay_witness(g, 0, refut, wr));

  // tampered traces must not replay
  Witness bad = wf;
  bad.steps[0].second = Label::visible(0, "z");
  CHECK(!replay_witness(g, 0, fp, bad));
}

TEST_CASE("epistemic layer agrees with the per-state models") {
  Fixture fx(R"(
props: p
const S := c!(1, p).0
pool:
agent 0 : S observes all
agent 1 : c?(_, _).0 observes none
init: {p}
)");
  const auto& g = fx.graph;
  StateSet k1p = sat_states(g, fx.f("K[1] p"));
  FormulaInterner& in = fx.formulas;
  EFormula inner = in.know(1, in.prop(0));
  for (std::uint32_t s = 0; s < g.n_states(); ++s)
    CHECK(k1p.test(s) == holds_at(g.model_of(s), g.states[s].x, inner));
}
