#include "doctest.h"

#include "kepal/kripke.hpp"
#include "support/gen.hpp"
#include "support/oracle_eval.hpp"
#include "support/pairset.hpp"

using namespace kepal;

namespace {

/// At={p,q}, agents 1 and 2; agent 1 observes p, agent 2 observes nothing.
KripkeModel two_prop_model() {
  KripkeModel m;
  m.at_size = 2;
  m.agent_ids = {1, 2};
  m.rels = {std::make_shared<const PartitionRelation>(PartitionRelation::agreement(2, 0b01)),
            std::make_shared<const PartitionRelation>(PartitionRelation::single(4))};
  return m;
}

}  // namespace

TEST_CASE("satisfaction of knowledge formulas") {
  FormulaInterner in;
  KripkeModel m = two_prop_model();
  const EFormula p = in.prop(0);
  const EFormula q = in.prop(1);

  // worlds: 0={}, 1={p}, 2={q}, 3={p,q}
  WorldSet k1p = sat_set(m, in.know(1, p));
  CHECK(k1p.test(1));
  CHECK(k1p.test(3));
  CHECK(!k1p.test(0));
  CHECK(!k1p.test(2));

  CHECK(sat_set(m, in.truth()) == WorldSet::full(4));

  // agent 1 knows the truth value of p everywhere and nothing about q
  WorldSet either = sat_set(m, in.know(1, p)) | sat_set(m, in.know(1, in.negate(p)));
  CHECK(either == WorldSet::full(4));
  CHECK(sat_set(m, in.know(1, q)).none());
}

TEST_CASE("holds_at clauses") {
  FormulaInterner in;
  KripkeModel m = two_prop_model();
  CHECK(holds_at(m, 0b01, in.prop(0)));
  CHECK(holds_at(m, 0b00, in.negate(in.prop(0))));
  // {p,q}: the p-block also contains {p}, where q fails
  CHECK(!holds_at(m, 0b11, in.know(1, in.prop(1))));
}

TEST_CASE("diff oracle") {
  FormulaInterner in;
  KripkeModel m = two_prop_model();
  const EFormula p = in.prop(0);
  CHECK(diff_oracle(m, 0b01, 0b00, p));
  for (World x = 0; x < 4; ++x) CHECK(!diff_oracle(m, x, x, in.know(1, p)));
  // both {p} and {p,q} sit in a block contained in sat(p)
  CHECK(!diff_oracle(m, 0b01, 0b11, in.know(1, p)));
}

TEST_CASE("split_by equals pair deletion by diff") {
  // R has blocks {{},{q},{p}} and {{p,q}}; split by sat(p)
  FormulaInterner in;
  KripkeModel m = two_prop_model();
  std::vector<std::uint64_t> keys = {0, 0, 0, 1};  // worlds 0,1,2 together
  auto r = PartitionRelation::from_keys(keys);
  WorldSet satp = sat_set(m, in.prop(0));
  auto split = split_by(r, satp);

  CHECK(split.n_blocks() == 3);
  CHECK(split.same_block(0, 2));
  CHECK(!split.same_block(0, 1));

  // oracle: delete exactly the pairs disagreeing on p
  PairSet pairs = pairs_from_partition(r);
  PairSet kept;
  kept.n_worlds = pairs.n_worlds;
  for (auto [a, b] : pairs.pairs)
    if (!diff_oracle(m, a, b, in.prop(0))) kept.pairs.emplace_back(a, b);
  CHECK(pairs_from_partition(split) == kept);
}

TEST_CASE("merge_on_prop equals the full closure of the flip extension") {
  // blocks {{},{q}} {{p}} {{p,q}}; merging on p chains everything together
  std::vector<std::uint64_t> keys = {0, 1, 0, 2};
  auto r = PartitionRelation::from_keys(keys);
  auto merged = merge_on_prop(r, 0);
  CHECK(merged.n_blocks() == 1);

  oracle::PairRel base = oracle::PairRel::from_partition(r);
  oracle::PairRel with_flips = base;
  for (World w = 0; w < 4; ++w)
    if (!(w & 1)) {
      with_flips.set(w, w | 1);
      with_flips.set(w | 1, w);
    }
  CHECK(with_flips.closure_full().equals_partition(merged));

  // the single composition step of the update rule as literally written
  // misses the far end of the chain and is not transitive
  oracle::PairRel one_step = with_flips.closure_single_step();
  CHECK(!one_step.get(1, 3));
  CHECK(!one_step.transitive());
  CHECK(!one_step.equals_partition(merged));
}

TEST_CASE("relation property checks") {
  PairSet id;
  id.n_worlds = 4;
  for (World w = 0; w < 4; ++w) id.pairs.emplace_back(w, w);
  CHECK(relation_is(id, RelProp::Reflexive));
  CHECK(relation_is(id, RelProp::Symmetric));
  CHECK(relation_is(id, RelProp::Transitive));

  PairSet lone;
  lone.n_worlds = 4;
  lone.pairs.emplace_back(0, 1);
  CHECK(!relation_is(lone, RelProp::Symmetric));
  CHECK(!relation_is(lone, RelProp::Reflexive));
}

TEST_CASE("pair set and partition representations are mutually inverse") {
  auto id = PartitionRelation::identity(4);
  CHECK(partition_from_pairs(pairs_from_partition(id)) == id);
  auto one = PartitionRelation::single(4);
  CHECK(partition_from_pairs(pairs_from_partition(one)) == one);

  testgen::Rng rng(3);
  for (int i = 0; i < 40; ++i) {
    auto r = testgen::random_partition(rng, 8, 8);
    PairSet pairs = pairs_from_partition(r);
    CHECK(relation_is(pairs, RelProp::Reflexive));
    CHECK(relation_is(pairs, RelProp::Symmetric));
    CHECK(relation_is(pairs, RelProp::Transitive));
    CHECK(partition_from_pairs(pairs) == r);
  }

  PairSet bad;
  bad.n_worlds = 2;
  bad.pairs = {{0, 0}, {1, 1}, {0, 1}};
  CHECK_THROWS_WITH_AS(partition_from_pairs(bad), "pair set is not symmetric", SpecError);
}

TEST_CASE("set evaluator agrees with the recursive clause evaluator") {
  testgen::Rng rng(17);
  FormulaInterner in;
  for (int i = 0; i < 60; ++i) {
    std::uint32_t at = rng.in(1, 4);
    std::uint32_t n = 1u << at;
    KripkeModel m;
    m.at_size = at;
    m.agent_ids = {0, 1};
    m.rels = {std::make_shared<const PartitionRelation>(testgen::random_partition(rng, n, n)),
              std::make_shared<const PartitionRelation>(testgen::random_partition(rng, n, n))};
    for (int j = 0; j < 10; ++j) {
      EFormula f = testgen::random_formula(rng, in, at, m.agent_ids, 4);
      WorldSet s = sat_set(m, f);
      for (World x = 0; x < n; ++x) CHECK(s.test(x) == oracle::holds_rec(m, x, f));
    }
  }
}

TEST_CASE("knowledge is factive") {
  testgen::Rng rng(23);
  FormulaInterner in;
  for (int i = 0; i < 40; ++i) {
    std::uint32_t at = rng.in(1, 4);
    std::uint32_t n = 1u << at;
    KripkeModel m;
    m.at_size = at;
    m.agent_ids = {0};
    m.rels = {std::make_shared<const PartitionRelation>(testgen::random_partition(rng, n, n))};
    EFormula f = testgen::random_formula(rng, in, at, m.agent_ids, 3);
    CHECK(sat_set(m, in.know(0, f)).subset_of(sat_set(m, f)));
  }
}

TEST_CASE("relation block serialization") {
  std::vector<std::string> names = {"p", "q"};
  auto byp = PartitionRelation::agreement(2, 0b01);
  CHECK(format_relation_blocks(byp, names) == "{{},{q}} {{p},{p,q}}");
  CHECK(format_world(0b11, names) == "{p,q}");
}
