#include "doctest.h"

#include "kepal/kern.hpp"
#include "kepal/parser.hpp"
#include "kepal/pool.hpp"

using namespace kepal;

namespace {

ast::SystemSpec load(const char* src) { return parse_system(src).spec; }

const char* kSetterTrio = R"(
props: p
const S := set(p, 1).0
pool:
agent 0 : S observes none
agent 1 : 0 observes {p}
agent 2 : 0 observes {p}
init: {}
)";

const char* kUnsuccessful = R"(
props: p
const S := c!(1, p & !K[1] p).0
const R := c?(_, _).0
pool:
agent 0 : S observes all
agent 1 : R observes none
init: {p}
)";

}  // namespace

TEST_CASE("agent steps: prefixes, sums, symbolic inputs, recursion") {
  auto spec = load(R"(
props: p
const Agent := receive?(y, f).send!(y + 1, f).Agent
const Two := b.0 + c.0
const Setter := set(p, 1).0
pool:
agent 0 : Agent observes all
agent 1 : 0 observes none
init: {}
)");
  FormulaInterner in;

  auto setter = agent_steps(spec.find_const("Setter")->body, spec, in);
  REQUIRE(setter.size() == 1);
  CHECK(setter[0].action.kind == ast::Action::Kind::Set);
  CHECK(setter[0].action.prop == 0);
  CHECK(setter[0].action.value);
  CHECK(ast::print_term(setter[0].cont) == "0");

  auto two = agent_steps(spec.find_const("Two")->body, spec, in);
  REQUIRE(two.size() == 2);
  CHECK(two[0].action.name == "b");
  CHECK(two[1].action.name == "c");

  // recursion unfolds to the symbolic input
  auto loop = agent_steps(ast::mk_call("Agent", {}), spec, in);
  REQUIRE(loop.size() == 1);
  CHECK(loop[0].action.kind == ast::Action::Kind::Input);
  CHECK(loop[0].action.name == "receive");
  CHECK(loop[0].action.bind_y == "y");

  // instantiating the continuation with (3, true) forwards to agent 4
  ast::Term cont = substitute(loop[0].cont, ast::Bindings{{"y", std::int64_t{3}},
                                                          {"f", ast::mk_true()}});
  CHECK(ast::print_term(cont) == "send!(3 + 1, true).Agent");
  auto next = agent_steps(cont, spec, in);
  REQUIRE(next.size() == 1);
  CHECK(next[0].action.dest == 4);
}

TEST_CASE("pool steps: internal actions are visible and agent-tagged") {
  auto spec = load(R"(
props: p
pool:
agent 0 : 0 observes none
agent 1 : b.0 observes none
init: {}
)");
  EngineContext ctx(spec);
  auto steps = pool_steps(ctx, ctx.initial_state());
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].first.str() == "1.b");
}

TEST_CASE("communication is gated by the sender's knowledge") {
  // agent 0 does not know p (observes none): no com
  auto blocked = load(R"(
props: p
const S := c!(1, p).0
pool:
agent 0 : S observes none
agent 1 : c?(_, _).0 observes none
init: {p}
)");
  EngineContext bctx(blocked);
  CHECK(pool_steps(bctx, bctx.initial_state()).empty());

  // with observes all the premise holds; the receiver learns p
  auto open = load(R"(
props: p
const S := c!(1, p).0
pool:
agent 0 : S observes all
agent 1 : c?(_, _).0 observes none
init: {p}
)");
  EngineContext ctx(open);
  auto steps = pool_steps(ctx, ctx.initial_state());
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].first.tau);
  const PoolState& post = steps[0].second;
  EFormula k1p = ctx.formulas().know(1, ctx.formulas().prop(0));
  CHECK(ctx.sat(post.rels, k1p).test(post.x));
}

TEST_CASE("outputs to self or to unknown agents never synchronize") {
  auto spec = load(R"(
props: p
const S := c!(0, true).0 + c!(9, true).0
pool:
agent 0 : S observes all
agent 1 : c?(_, _).0 observes none
init: {}
)");
  EngineContext ctx(spec);
  CHECK(pool_steps(ctx, ctx.initial_state()).empty());
}

TEST_CASE("assignment updates valuation and knowledge") {
  auto spec = load(kSetterTrio);
  EngineContext ctx(spec);
  PoolState s0 = ctx.initial_state();

  // prior knowledge: agents 1 and 2 know p is false
  EFormula p = ctx.formulas().prop(0);
  EFormula np = ctx.formulas().negate(p);
  CHECK(ctx.sat(s0.rels, ctx.formulas().know(1, np)).test(s0.x));
  CHECK(ctx.sat(s0.rels, ctx.formulas().know(2, np)).test(s0.x));

  auto steps = pool_steps(ctx, s0);
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].first.tau);
  const PoolState& s1 = steps[0].second;
  CHECK(s1.x == 1);

  // the assigning agent acquires knowledge of p
  CHECK(ctx.sat(s1.rels, ctx.formulas().know(0, p)).test(s1.x));
  CHECK(!ctx.sat(s1.rels, ctx.formulas().know(0, np)).test(s1.x));
  // the others lose what they had, both ways
  for (std::uint32_t agent : {1u, 2u}) {
    CHECK(!ctx.sat(s1.rels, ctx.formulas().know(agent, p)).test(s1.x));
    CHECK(!ctx.sat(s1.rels, ctx.formulas().know(agent, np)).test(s1.x));
  }

  // relation monotonicity: setter refines, others coarsen
  CHECK(refines(*s1.rels[0], *s0.rels[0]));
  CHECK(refines(*s0.rels[1], *s1.rels[1]));
  CHECK(refines(*s0.rels[2], *s1.rels[2]));
}

TEST_CASE("communicating `p and not K p` makes itself false") {
  auto spec = load(kUnsuccessful);
  EngineContext ctx(spec);
  PoolState s0 = ctx.initial_state();
  auto steps = pool_steps(ctx, s0);
  REQUIRE(steps.size() == 1);
  const PoolState& post = steps[0].second;

  FormulaInterner& in = ctx.formulas();
  EFormula p = in.prop(0);
  EFormula payload = in.conj(p, in.negate(in.know(1, p)));
  CHECK(ctx.sat(post.rels, in.know(1, p)).test(post.x));
  CHECK(!ctx.sat(post.rels, in.know(1, payload)).test(post.x));
  // communication only refines the receiver
  CHECK(refines(*post.rels[1], *s0.rels[1]));
  CHECK(*post.rels[0] == *s0.rels[0]);
  CHECK(post.x == s0.x);
}

TEST_CASE("exploration deduplicates and reports shapes") {
  auto loop = load(R"(
props: p
const C := b.C
pool:
agent 0 : C observes all
init: {}
)");
  auto r = explore(loop);
  CHECK(r.graph.n_states() == 1);
  REQUIRE(r.graph.trans.size() == 1);
  CHECK(r.graph.trans[0].src == 0);
  CHECK(r.graph.trans[0].dst == 0);
  CHECK(!r.graph.truncated);

  auto line = load(R"(
props: p
const C := set(p, 1).set(p, 0).0
pool:
agent 0 : C observes all
init: {}
)");
  auto lr = explore(line);
  CHECK(lr.graph.n_states() == 3);
  CHECK(lr.graph.trans.size() == 2);
  for (const auto& t : lr.graph.trans) CHECK(t.label.tau);
}

TEST_CASE("independent interleavings reach the same state") {
  auto spec = load(R"(
props: p
pool:
agent 0 : b.0 observes none
agent 1 : c.0 observes none
init: {}
)");
  auto r = explore(spec);
  // diamond: root, two mid states, one join
  CHECK(r.graph.n_states() == 4);
  CHECK(r.graph.trans.size() == 4);

  EngineContext ctx(spec);
  PoolState s0 = ctx.initial_state();
  auto first = pool_steps(ctx, s0);
  REQUIRE(first.size() == 2);
  auto ab = pool_steps(ctx, first[0].second);
  auto ba = pool_steps(ctx, first[1].second);
  REQUIRE(ab.size() == 1);
  REQUIRE(ba.size() == 1);
  CHECK(canonical_key(ctx, ab[0].second) == canonical_key(ctx, ba[0].second));
  CHECK(canonical_key(ctx, ab[0].second) != canonical_key(ctx, s0));

  // states differing only in the valuation get different keys
  PoolState flipped = s0;
  flipped.x ^= 1;
  CHECK(canonical_key(ctx, flipped) != canonical_key(ctx, s0));
  CHECK(canonical_key(ctx, s0) == canonical_key(ctx, s0));
}

TEST_CASE("exploration limits flag truncation") {
  auto spec = load(R"(
props: p[1..3]
const C(x) := set(p[1], 1).set(p[1], 0).C(x + 1)
pool:
agent 0 : C(0) observes all
init: {}
)");
  auto capped = explore(spec, ExploreOptions{.max_states = 5, .max_depth = UINT32_MAX,
                                             .parallel = true});
  CHECK(capped.graph.truncated);
  CHECK(capped.graph.truncation_reason == "state limit");
  CHECK(capped.graph.n_states() == 5);

  auto shallow = explore(spec, ExploreOptions{.max_states = 1'000'000, .max_depth = 2,
                                              .parallel = true});
  CHECK(shallow.graph.truncated);
  CHECK(shallow.graph.truncation_reason == "depth limit");
}

TEST_CASE("exploration is deterministic and parallel-invariant") {
  auto spec = load(R"(
props: p, q
const A := set(p, 1).(b.A + c!(1, p).A)
const B := c?(y, f).set(q, 1).B + d.B
pool:
agent 0 : A observes {p}
agent 1 : B observes none
init: {}
)");
  auto a = explore(spec);
  auto b = explore(spec);
  std::string da = dump_graph(a.graph);
  CHECK(da == dump_graph(b.graph));

  bool was = kern::parallel_enabled();
  kern::set_parallel_enabled(false);
  auto serial = explore(spec, ExploreOptions{.max_states = 1'000'000,
                                             .max_depth = UINT32_MAX, .parallel = false});
  kern::set_parallel_enabled(was);
  CHECK(da == dump_graph(serial.graph));
}

TEST_CASE("projection keeps states, labels, and the root") {
  auto spec = load(kSetterTrio);
  auto r = explore(spec);
  Lts lts = project_lts(r.graph);
  CHECK(lts.n_states == r.graph.n_states());
  CHECK(lts.trans.size() == r.graph.trans.size());
  CHECK(lts.root == r.graph.root);
}

TEST_CASE("graph dumps are stable and carry relation digests") {
  auto spec = load(kUnsuccessful);
  auto r = explore(spec);
  std::string full = dump_graph(r.graph, DumpOptions{RelDumpMode::Full});
  CHECK(full.find("STATE 0") != std::string::npos);
  // observes all -> singleton blocks; observes none -> one block
  CHECK(full.find("REL[0]={{}} {{p}}") != std::string::npos);
  CHECK(full.find("REL[1]={{},{p}}") != std::string::npos);
  std::string hashed = dump_graph(r.graph, DumpOptions{RelDumpMode::Hash});
  CHECK(hashed.find("#") != std::string::npos);
}
