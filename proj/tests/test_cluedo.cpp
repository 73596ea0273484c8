#include "doctest.h"

#include <set>
#include "kepal/cluedo.hpp"
#include "kepal/parser.hpp"
#include "kepal/pool.hpp"

using namespace kepal;

TEST_CASE("configuration invariants") {
  CHECK_NOTHROW((cluedo::Config{3, 2, 1, 1}).validate());
  CHECK_NOTHROW((cluedo::Config{8, 3, 2, 2}).validate());
  CHECK_THROWS_AS((cluedo::Config{4, 2, 2, 1}).validate(), SpecError);
  CHECK_THROWS_AS((cluedo::Config{12, 4, 2, 4}).validate(), SpecError);
  CHECK_THROWS_AS((cluedo::Config{4, 2, 1, 0}).validate(), SpecError);
}

TEST_CASE("generated systems load within the cap") {
  cluedo::Config cfg{4, 2, 1, 2};
  std::string text = cluedo::system_text(cfg);
  LoadResult r = parse_system(text);
  CHECK(r.spec.props.size() == 12);  // 4 cards x 2 players + 4 secrets
  CHECK(r.spec.agents.size() == 3);
  CHECK(r.spec.agents[2].name == "dealer");
  CHECK(r.spec.agents[2].obs.kind == ast::ObservesClause::Kind::All);
  CHECK(r.spec.agents[0].obs.props.size() == 4);
  CHECK(r.warnings.empty());

  // printing the parsed system and reparsing is stable
  std::string once = ast::print_system(r.spec);
  CHECK(once == ast::print_system(parse_system(once).spec));
}

TEST_CASE("deal branch counts match the closed form") {
  cluedo::Config small{4, 2, 1, 2};
  CHECK(cluedo::deal_branch_closed_form(small) == 12);
  CHECK(cluedo::deal_branch_count(cluedo::build_system(small)) == 12);

  cluedo::Config tiny{3, 2, 1, 1};
  CHECK(cluedo::deal_branch_closed_form(tiny) == 3 * 2);
  CHECK(cluedo::deal_branch_count(cluedo::build_system(tiny)) == 6);

  // the full game is generated and counted without exploring anything
  cluedo::Config full{8, 3, 2, 2};
  CHECK(cluedo::deal_branch_closed_form(full) == 2520);
  CHECK(cluedo::deal_branch_count(cluedo::build_system(full)) == 2520);
}

TEST_CASE("fixed deals collapse the dealing choice") {
  cluedo::Config cfg{4, 2, 1, 2};
  auto fixed = cluedo::parse_fixed_deal("1,2|3|4", cfg);
  CHECK(fixed.secret == std::vector<std::uint32_t>{1, 2});
  auto spec = cluedo::build_system(cfg, &fixed);
  CHECK(cluedo::deal_branch_count(spec) == 1);

  CHECK_THROWS_AS(cluedo::parse_fixed_deal("1,2|3", cfg), SpecError);
  CHECK_THROWS_AS(cluedo::parse_fixed_deal("1,2|3|3", cfg), SpecError);
  CHECK_THROWS_AS(cluedo::parse_fixed_deal("1,2|3,4|5", cfg), SpecError);

  // the fixed game loads and explores to a small graph
  LoadResult r = parse_system(cluedo::system_text(cfg, &fixed));
  auto res = explore(r.spec, ExploreOptions{.max_states = 50'000,
                                            .max_depth = UINT32_MAX, .parallel = true});
  CHECK(!res.graph.truncated);
  CHECK(res.graph.n_states() > 10);
}

TEST_CASE("dealing reaches one valuation per deal") {
  cluedo::Config cfg{4, 2, 1, 2};
  auto spec = cluedo::build_system(cfg);
  // the dealing chain finishes within seven layers; play never changes X
  auto res = explore(spec, ExploreOptions{.max_states = 200'000, .max_depth = 7,
                                          .parallel = true});
  std::set<World> post_deal;
  for (const auto& st : res.graph.states)
    if (__builtin_popcount(st.x) == 4) post_deal.insert(st.x);
  CHECK(post_deal.size() == 12);
}

TEST_CASE("winning formulas expand over the secret subsets") {
  cluedo::Config cfg{4, 2, 1, 2};
  std::string phi0 = cluedo::phi_text(cfg, 0);
  // C(4,2) = 6 disjuncts
  std::size_t count = 0;
  for (std::size_t at = phi0.find("K[0]"); at != std::string::npos;
       at = phi0.find("K[0]", at + 1))
    ++count;
  CHECK(count == 6);
  CHECK(phi0.find("q[1] & q[2]") != std::string::npos);
  CHECK(cluedo::win_formula_text(cfg).substr(0, 2) == "F ");
  CHECK(cluedo::unreach_formula_text(cfg).substr(0, 2) == "G ");
}
