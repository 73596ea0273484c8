#include "doctest.h"

#include "kepal/bisim.hpp"
#include "kepal/parser.hpp"
#include "support/gen.hpp"

using namespace kepal;

namespace {

RelPtr share(PartitionRelation r) {
  return std::make_shared<const PartitionRelation>(std::move(r));
}

KripkeModel model2(RelPtr a, RelPtr b) {
  KripkeModel m;
  m.at_size = 2;
  m.agent_ids = {0, 1};
  m.rels = {std::move(a), std::move(b)};
  return m;
}

}  // namespace

TEST_CASE("pointwise model equivalence") {
  auto byp = share(PartitionRelation::agreement(2, 0b01));
  auto byq = share(PartitionRelation::agreement(2, 0b10));
  auto id = share(PartitionRelation::identity(4));
  auto one = share(PartitionRelation::single(4));

  CHECK(kripke_point_equiv(model2(byp, byq), 1, model2(byp, byq), 1));
  CHECK(!kripke_point_equiv(model2(byp, byq), 1, model2(byp, byq), 2));
  CHECK(!kripke_point_equiv(model2(byp, byq), 1, model2(byq, byp), 1));
  CHECK(!kripke_point_equiv(model2(id, id), 0, model2(one, one), 0));

  KripkeModel other;
  other.at_size = 1;
  other.agent_ids = {0, 1};
  other.rels = {share(PartitionRelation::identity(2)), share(PartitionRelation::single(2))};
  CHECK_THROWS_AS(kripke_point_equiv(model2(byp, byq), 0, other, 0), SpecError);
}

namespace {

/// Exhaustive search for a world relation witnessing pointwise model
/// equivalence: a set W of worlds containing the (shared) valuation such
/// that both families agree on W and W is closed under their steps. The
/// engine's reachable-part characterization must coincide with it.
bool brute_force_point_equiv(const KripkeModel& a, World va, const KripkeModel& b,
                             World vb) {
  if (va != vb) return false;
  const std::uint32_t n = a.n_worlds();
  for (std::uint32_t w_mask = 0; w_mask < (1u << n); ++w_mask) {
    if (!(w_mask >> va & 1)) continue;
    bool ok = true;
    for (World x = 0; ok && x < n; ++x) {
      if (!(w_mask >> x & 1)) continue;
      for (std::size_t i = 0; ok && i < a.rels.size(); ++i) {
        for (World y = 0; y < n; ++y) {
          bool in_a = a.rels[i]->same_block(x, y);
          bool in_b = b.rels[i]->same_block(x, y);
          // steps from W must be mirrored and stay inside W
          if (in_a && (!in_b || !(w_mask >> y & 1))) { ok = false; break; }
          if (in_b && (!in_a || !(w_mask >> y & 1))) { ok = false; break; }
        }
      }
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("point equivalence agrees with the exhaustive witness search") {
  testgen::Rng rng(59);
  for (int i = 0; i < 120; ++i) {
    std::uint32_t at = rng.in(1, 3);
    std::uint32_t n = 1u << at;
    KripkeModel a, b;
    a.at_size = b.at_size = at;
    a.agent_ids = b.agent_ids = {0, 1};
    for (int k = 0; k < 2; ++k) {
      a.rels.push_back(share(testgen::random_partition(rng, n, n)));
      // sampling near-copies keeps the equal verdict reachable
      b.rels.push_back(rng.chance(0.4) ? a.rels.back()
                                       : share(testgen::random_partition(rng, n, n)));
    }
    World v = rng.upto(n - 1);
    CHECK(kripke_point_equiv(a, v, b, v) == brute_force_point_equiv(a, v, b, v));
  }
}

TEST_CASE("unreachable worlds do not constrain point equivalence") {
  // families agree on the block of world 0 but differ on worlds only
  // reachable from elsewhere
  auto a = share(PartitionRelation::from_keys(std::vector<std::uint64_t>{0, 0, 1, 2}));
  auto b = share(PartitionRelation::from_keys(std::vector<std::uint64_t>{0, 0, 1, 1}));
  KripkeModel ma, mb;
  ma.at_size = mb.at_size = 2;
  ma.agent_ids = mb.agent_ids = {0};
  ma.rels = {a};
  mb.rels = {b};
  CHECK(kripke_point_equiv(ma, 0, mb, 0));   // reachable part: {0,1}
  CHECK(!kripke_point_equiv(ma, 2, mb, 2));  // now the difference is visible
}

TEST_CASE("bisimilarity on explored systems") {
  auto a = parse_system(R"(
props: p
const C := b.C
pool:
agent 0 : C observes all
init: {}
)").spec;
  // the same behavior under renamed constants
  auto b = parse_system(R"(
props: p
const Loop := b.Walk
const Walk := b.Loop
pool:
agent 0 : Loop observes all
init: {}
)").spec;
  auto ga = explore(a).graph;
  auto gb = explore(b).graph;
  auto [u, off] = disjoint_union(ga, gb);
  auto v = bisimilar(u, ga.root, off + gb.root);
  CHECK(v.equal);

  auto self = bisimilar(ga, 0, 0);
  CHECK(self.equal);
}

TEST_CASE("valuation differences are condition 1") {
  auto spec = parse_system(R"(
props: p
const C := set(p, 1).0
pool:
agent 0 : C observes all
init: {}
)").spec;
  auto g = explore(spec).graph;
  REQUIRE(g.n_states() == 2);
  auto v = bisimilar(g, 0, 1);
  CHECK(!v.equal);
  CHECK(v.diagnostic.find("condition 1") != std::string::npos);
}

TEST_CASE("observation differences are condition 3") {
  auto a = parse_system(R"(
props: p
const C := b.C
pool:
agent 0 : C observes all
init: {}
)").spec;
  auto b = parse_system(R"(
props: p
const C := b.C
pool:
agent 0 : C observes none
init: {}
)").spec;
  auto [u, off] = disjoint_union(explore(a).graph, explore(b).graph);
  auto v = bisimilar(u, 0, off);
  CHECK(!v.equal);
  CHECK(v.diagnostic.find("condition 3") != std::string::npos);
}

TEST_CASE("behavioral differences are condition 2") {
  auto a = parse_system(R"(
props: p
const C := b.C + c.0
pool:
agent 0 : C observes all
init: {}
)").spec;
  auto b = parse_system(R"(
props: p
const C := b.C
pool:
agent 0 : C observes all
init: {}
)").spec;
  auto [u, off] = disjoint_union(explore(a).graph, explore(b).graph);
  auto v = bisimilar(u, 0, off);
  CHECK(!v.equal);
  CHECK(v.diagnostic.find("condition 2") != std::string::npos);
}

TEST_CASE("permuted copies stay bisimilar and modal-equivalent") {
  testgen::Rng rng(41);
  auto meta = std::make_shared<KltsMeta>();
  meta->prop_names = {"p", "q"};
  meta->agent_ids = {0, 1};
  auto pool = testgen::mask_relation_pool(2);
  FormulaInterner in;

  for (int i = 0; i < 15; ++i) {
    KltsGraph g = testgen::random_graph(rng, meta, pool, 8);
    KltsGraph h = testgen::permuted_copy(rng, g);
    auto [u, off] = disjoint_union(g, h);
    auto v = bisimilar(u, g.root, off + h.root);
    CHECK(v.equal);
    auto m = modal_equiv(u, g.root, off + h.root, ModalEquivOptions{}, in);
    CHECK(m.equal);
  }
}

TEST_CASE("modal equivalence finds distinguishing formulas") {
  auto meta = std::make_shared<KltsMeta>();
  meta->prop_names = {"p"};
  meta->agent_ids = {0};
  auto id = share(PartitionRelation::identity(2));
  auto one = share(PartitionRelation::single(2));

  // two states, same valuation, different knowledge
  KltsGraph g;
  g.meta = meta;
  g.states.resize(2);
  g.states[0].x = 1;
  g.states[0].rels = {id};
  g.states[1].x = 1;
  g.states[1].rels = {one};
  g.finalize();

  FormulaInterner in;
  auto m = modal_equiv(g, 0, 1, ModalEquivOptions{}, in);
  CHECK(!m.equal);
  CHECK(!m.distinguishing.empty());
  CHECK(!bisimilar(g, 0, 1).equal);

  // identical states are equivalent at any depth
  auto same = modal_equiv(g, 0, 0, ModalEquivOptions{.depth = 1, .epi_depth = 1,
                                                     .pool_cap = 200}, in);
  CHECK(same.equal);
}

TEST_CASE("bisimilarity is an equivalence on sampled states") {
  testgen::Rng rng(43);
  auto meta = std::make_shared<KltsMeta>();
  meta->prop_names = {"p", "q"};
  meta->agent_ids = {0, 1};
  auto pool = testgen::mask_relation_pool(2);
  KltsGraph g = testgen::random_graph(rng, meta, pool, 12);
  auto v = bisimilar(g, 0, 0);
  for (std::uint32_t a = 0; a < g.n_states(); ++a) {
    CHECK(bisimilar(g, a, a).equal);
    for (std::uint32_t b = 0; b < g.n_states(); ++b) {
      CHECK(bisimilar(g, a, b).equal == bisimilar(g, b, a).equal);
      CHECK(bisimilar(g, a, b).equal == (v.blocks[a] == v.blocks[b]));
    }
  }
  CHECK(v.rounds <= static_cast<int>(g.n_states()));
}
