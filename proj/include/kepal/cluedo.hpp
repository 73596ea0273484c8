#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kepal/ast.hpp"

namespace kepal::cluedo {

/// Game shape: n cards, m players with c cards each, k cards set aside as
/// the secret. Requires k + m*c = n, everything positive, and m in {2, 3}:
/// with more than three players the indirect show routing would need the
/// responder to branch on the asker's identity, which the calculus cannot
/// express without knowledge-guarded choice.
struct Config {
  std::uint32_t cards = 8;
  std::uint32_t players = 3;
  std::uint32_t per_player = 2;
  std::uint32_t secret = 2;

  void validate() const;  // throws SpecError on invariant violations
  std::uint32_t prop_count() const { return players * cards + cards; }
  std::uint32_t dealer_id() const { return players; }
};

/// Pins the dealer's nondeterministic choices: the secret cards and each
/// player's hand, a partition of 1..cards.
struct FixedDeal {
  std::vector<std::uint32_t> secret;
  std::vector<std::vector<std::uint32_t>> hands;  // per player
};

/// Parses "1,2|3,4|5,6|7,8" (secret first, then one group per player) and
/// checks it partitions the deck with the configured group sizes.
FixedDeal parse_fixed_deal(const std::string& text, const Config& cfg);

/// The complete game system: propositions p[card][player] and q[card],
/// one Player agent per player, a Dealer agent (id = player count,
/// symbolic name `dealer`), dealing via assignments plus deal messages,
/// then the turn protocol with ask/show/end_turn/win.
ast::SystemSpec build_system(const Config& cfg, const FixedDeal* fixed = nullptr);

/// Specification text for build_system, with the winning formulas noted
/// in header comments.
std::string system_text(const Config& cfg, const FixedDeal* fixed = nullptr);

/// The winning formula of player x, expanded over the secret subsets:
/// a disjunction of K[x] over each candidate secret combination.
std::string phi_text(const Config& cfg, std::uint32_t player);
/// `F (phi_0 | ... | phi_{m-1})`: some player can come to know the secret.
std::string win_formula_text(const Config& cfg);
/// `G (!phi_0 & ... & !phi_{m-1})`: some play never reveals it to anyone.
std::string unreach_formula_text(const Config& cfg);

/// Number of complete dealing resolutions, counted syntactically by
/// unfolding the dealer's term and expanding its sums, stopping at the
/// turn loop. No state space is built, so this works above the world cap.
std::uint64_t deal_branch_count(const ast::SystemSpec& spec);

/// The same count in closed form: binom(n,k) * prod_j binom(remaining, c).
std::uint64_t deal_branch_closed_form(const Config& cfg);

}  // namespace kepal::cluedo
