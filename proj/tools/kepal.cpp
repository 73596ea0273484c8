#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "kepal/bisim.hpp"
#include "kepal/checker.hpp"
#include "kepal/cluedo.hpp"
#include "kepal/kern.hpp"
#include "kepal/parser.hpp"

using namespace kepal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFalse = 2;
constexpr int kExitTruncated = 3;

class Timer {
public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  long ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

/// Ordered key=value report; timing fields are prefixed `time_` so tooling
/// can strip them before comparing runs.
struct Report {
  std::vector<std::pair<std::string, std::string>> fields;
  bool record = false;

  void add(std::string k, std::string v) { fields.emplace_back(std::move(k), std::move(v)); }
  void add(std::string k, std::uint64_t v) { add(std::move(k), std::to_string(v)); }
  void add_bool(std::string k, bool v) { add(std::move(k), v ? "true" : "false"); }

  void emit(std::ostream& os) const {
    if (record) {
      nlohmann::ordered_json j;
      for (const auto& [k, v] : fields) {
        if (!j.contains(k))
          j[k] = v;
        else if (j[k].is_array())
          j[k].push_back(v);
        else
          j[k] = nlohmann::ordered_json::array({j[k], v});
      }
      os << j.dump(2) << "\n";
    } else {
      for (const auto& [k, v] : fields) os << k << "=" << v << "\n";
    }
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SpecError("cannot write " + path);
  out << content;
}

struct LoadedSpec {
  LoadResult load;
  std::string digest;
};

LoadedSpec load_spec(const std::string& path, Report& rep) {
  std::string text = read_file(path);
  LoadedSpec out;
  out.digest = hex64(fnv1a64(text));
  rep.add("spec", path);
  rep.add("spec_digest", out.digest);
  out.load = parse_system(text);
  for (const auto& w : out.load.warnings) rep.add("warning", w);
  return out;
}

struct ExploreFlags {
  std::uint32_t max_states = 1'000'000;
  std::uint32_t max_depth = UINT32_MAX;
  bool serial = false;

  ExploreOptions options() const {
    return ExploreOptions{max_states, max_depth, !serial};
  }
  void attach(CLI::App* cmd) {
    cmd->add_option("--max-states", max_states, "state budget before truncation");
    cmd->add_option("--max-depth", max_depth, "layer budget before truncation");
    cmd->add_flag("--serial", serial, "disable the parallel frontier kernels");
  }
};

RelDumpMode parse_rel_mode(const std::string& s) {
  if (s == "full") return RelDumpMode::Full;
  if (s == "hash") return RelDumpMode::Hash;
  return RelDumpMode::Auto;
}

int finish(Report& rep, const Timer& t, bool truncated, bool verdict_known,
           bool verdict) {
  rep.add("time_total_ms", static_cast<std::uint64_t>(t.ms()));
  rep.emit(std::cout);
  if (truncated) return kExitTruncated;
  if (verdict_known && !verdict) return kExitFalse;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "kepal - model checker and interpreter for epistemic agent pools\n"
      "exit codes: 0 success/true, 1 error, 2 verdict false, 3 truncated"};
  app.require_subcommand(1);

  std::string format = "text";
  app.add_option("--format", format, "report format: text or record (json)")
      ->check(CLI::IsMember({"text", "record"}));

  // ---- validate
  auto* validate = app.add_subcommand("validate", "parse and statically check a spec");
  std::string validate_path;
  validate->add_option("spec", validate_path, "specification file")->required();

  // ---- explore
  auto* explore_cmd = app.add_subcommand("explore", "build the reachable state graph");
  std::string explore_path, explore_out, explore_rels = "auto";
  ExploreFlags explore_flags;
  explore_cmd->add_option("spec", explore_path, "specification file")->required();
  explore_flags.attach(explore_cmd);
  explore_cmd->add_option("--out", explore_out, "write the graph dump to this file");
  explore_cmd->add_option("--relations", explore_rels,
                          "relation dump form: auto, full, hash")
      ->check(CLI::IsMember({"auto", "full", "hash"}));

  // ---- check
  auto* check_cmd = app.add_subcommand("check", "explore, then decide a formula");
  std::string check_path, check_formula;
  ExploreFlags check_flags;
  check_cmd->add_option("spec", check_path, "specification file")->required();
  check_cmd->add_option("formula", check_formula, "temporal-epistemic formula")
      ->required();
  check_flags.attach(check_cmd);

  // ---- bisim
  auto* bisim_cmd = app.add_subcommand("bisim", "decide bisimilarity");
  std::string bisim_a, bisim_b;
  std::vector<std::uint32_t> bisim_states;
  ExploreFlags bisim_flags;
  bisim_cmd->add_option("specA", bisim_a, "first specification")->required();
  bisim_cmd->add_option("specB", bisim_b, "second specification (roots compared)");
  bisim_cmd
      ->add_option("--states", bisim_states,
                   "compare two state ids inside specA instead")
      ->expected(2);
  bisim_flags.attach(bisim_cmd);

  // ---- cluedo-gen
  auto* gen = app.add_subcommand("cluedo-gen", "generate a card-game specification");
  cluedo::Config cfg;
  std::string gen_out, fix_deal;
  gen->add_option("--cards", cfg.cards, "number of cards")->capture_default_str();
  gen->add_option("--players", cfg.players, "number of players")->capture_default_str();
  gen->add_option("--per-player", cfg.per_player, "cards dealt to each player")
      ->capture_default_str();
  gen->add_option("--secret", cfg.secret, "cards set aside")->capture_default_str();
  gen->add_option("--out", gen_out, "write the specification here");
  gen->add_option("--fix-deal", fix_deal,
                  "pin the dealing, e.g. \"1,2|3,4|5,6|7,8\" (secret first)");

  CLI11_PARSE(app, argc, argv);

  Report rep;
  rep.record = format == "record";
  Timer timer;

  try {
    if (*validate) {
      rep.add("command", "validate");
      LoadedSpec s = load_spec(validate_path, rep);
      rep.add("propositions", s.load.spec.props.size());
      rep.add("agents", static_cast<std::uint64_t>(s.load.spec.agents.size()));
      rep.add("constants", static_cast<std::uint64_t>(s.load.spec.consts.size()));
      rep.add_bool("valid", true);
      return finish(rep, timer, false, false, true);
    }

    if (*explore_cmd) {
      rep.add("command", "explore");
      LoadedSpec s = load_spec(explore_path, rep);
      Timer et;
      ExploreResult res = explore(s.load.spec, explore_flags.options());
      rep.add("states", res.graph.n_states());
      rep.add("transitions", static_cast<std::uint64_t>(res.graph.trans.size()));
      rep.add("depth", res.depth);
      rep.add_bool("truncated", res.graph.truncated);
      if (res.graph.truncated) rep.add("truncation_reason", res.graph.truncation_reason);
      rep.add("time_explore_ms", static_cast<std::uint64_t>(et.ms()));
      std::string dump = dump_graph(res.graph, DumpOptions{parse_rel_mode(explore_rels)});
      if (!explore_out.empty()) {
        write_file(explore_out, dump);
        rep.add("dump", explore_out);
        return finish(rep, timer, res.graph.truncated, false, true);
      }
      rep.add("time_total_ms", static_cast<std::uint64_t>(timer.ms()));
      rep.emit(std::cout);
      std::cout << dump;
      return res.graph.truncated ? kExitTruncated : kExitOk;
    }

    if (*check_cmd) {
      rep.add("command", "check");
      LoadedSpec s = load_spec(check_path, rep);
      rep.add("formula", check_formula);
      Timer et;
      ExploreResult res = explore(s.load.spec, check_flags.options());
      rep.add("states", res.graph.n_states());
      rep.add("transitions", static_cast<std::uint64_t>(res.graph.trans.size()));
      rep.add_bool("truncated", res.graph.truncated);
      rep.add("time_explore_ms", static_cast<std::uint64_t>(et.ms()));

      FormulaInterner interner;
      KtFormula f = parse_kt_formula(check_formula, *res.graph.meta, interner);
      SatCache cache;
      Timer ct;
      StateSet sat = sat_states(res.graph, f, &cache);
      bool verdict = sat.test(res.graph.root);
      Witness w = witness(res.graph, res.graph.root, f, &cache);
      rep.add("time_check_ms", static_cast<std::uint64_t>(ct.ms()));
      rep.add_bool("verdict", verdict);
      rep.add("satisfying_states", sat.count());
      rep.add("witness", format_witness(w));
      rep.add_bool("witness_replays",
                   replay_witness(res.graph, res.graph.root, f, w, &cache));
      return finish(rep, timer, res.graph.truncated, true, verdict);
    }

    if (*bisim_cmd) {
      rep.add("command", "bisim");
      LoadedSpec a = load_spec(bisim_a, rep);
      Timer et;
      ExploreResult ra = explore(a.load.spec, bisim_flags.options());
      bool truncated = ra.graph.truncated;
      BisimVerdict verdict;
      if (!bisim_states.empty()) {
        rep.add("mode", "states");
        verdict = bisimilar(ra.graph, bisim_states[0], bisim_states[1]);
      } else {
        if (bisim_b.empty()) throw SpecError("bisim needs a second spec or --states");
        LoadedSpec b = load_spec(bisim_b, rep);
        ExploreResult rb = explore(b.load.spec, bisim_flags.options());
        truncated = truncated || rb.graph.truncated;
        auto [u, off] = disjoint_union(ra.graph, rb.graph);
        verdict = bisimilar(u, ra.graph.root, off + rb.graph.root);
        rep.add("states", u.n_states());
      }
      rep.add("time_bisim_ms", static_cast<std::uint64_t>(et.ms()));
      rep.add_bool("truncated", truncated);
      rep.add_bool("bisimilar", verdict.equal);
      rep.add("blocks", verdict.n_blocks);
      rep.add("rounds", static_cast<std::uint64_t>(verdict.rounds));
      if (!verdict.equal) rep.add("diagnostic", verdict.diagnostic);
      return finish(rep, timer, truncated, true, verdict.equal);
    }

    if (*gen) {
      rep.add("command", "cluedo-gen");
      cfg.validate();
      std::optional<cluedo::FixedDeal> fixed;
      if (!fix_deal.empty()) fixed = cluedo::parse_fixed_deal(fix_deal, cfg);
      ast::SystemSpec spec = cluedo::build_system(cfg, fixed ? &*fixed : nullptr);
      rep.add("cards", cfg.cards);
      rep.add("players", cfg.players);
      rep.add("per_player", cfg.per_player);
      rep.add("secret", cfg.secret);
      rep.add("propositions", spec.props.size());
      rep.add("deal_branches", cluedo::deal_branch_count(spec));
      rep.add("deal_branches_closed_form",
              fixed ? std::uint64_t{1} : cluedo::deal_branch_closed_form(cfg));
      for (std::uint32_t j = 0; j < cfg.players; ++j)
        rep.add("phi[" + std::to_string(j) + "]", cluedo::phi_text(cfg, j));
      rep.add("win_formula", cluedo::win_formula_text(cfg));
      rep.add("no_win_formula", cluedo::unreach_formula_text(cfg));
      std::string text = cluedo::system_text(cfg, fixed ? &*fixed : nullptr);
      if (!gen_out.empty()) {
        write_file(gen_out, text);
        rep.add("out", gen_out);
        return finish(rep, timer, false, false, true);
      }
      rep.add("time_total_ms", static_cast<std::uint64_t>(timer.ms()));
      rep.emit(std::cout);
      std::cout << text;
      return kExitOk;
    }
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.formatted() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
