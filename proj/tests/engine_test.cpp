#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "chemlambda/engine.hpp"
#include "chemlambda/iso.hpp"
#include "chemlambda/lambda.hpp"
#include "chemlambda/mol_format.hpp"
#include "support/testing.hpp"

using namespace chemlambda;

namespace {

const Chemistry& v2() { return builtin_chemistry("chemlambda-v2"); }
Molecule mol(std::string_view text) { return parse_mol(text, KindTable::standard()); }

// Every (out slot, in slot) pair joined by an edge whose kinds and slots
// appear as some rule's lhs, found by scanning all node pairs.
std::vector<Match> naive_matches(const Molecule& m, const Chemistry& c) {
  std::vector<Match> out;
  for (const auto& a : m.nodes()) {
    const auto& ka = c.kinds().at(a.kind);
    for (std::size_t sa = 0; sa < a.ports.size(); ++sa) {
      if (ka.slots[sa].dir != Direction::out) continue;
      for (const auto& b : m.nodes()) {
        const auto& kb = c.kinds().at(b.kind);
        for (std::size_t sb = 0; sb < b.ports.size(); ++sb) {
          if (kb.slots[sb].dir != Direction::in || b.ports[sb] != a.ports[sa]) continue;
          for (const auto& r : c.rules()) {
            if (r.lhs[0].kind == a.kind && r.lhs[0].slot == sa && r.lhs[1].kind == b.kind && r.lhs[1].slot == sb) {
              out.push_back(Match{r.name, a.id, b.id, m.edge_name(a.ports[sa])});
            }
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Match& x, const Match& y) { return x.edge < y.edge; });
  return out;
}

std::multiset<std::string> boundary_multiset(const Molecule& m) {
  std::map<EdgeId, int> occ;
  for (const auto& n : m.nodes()) {
    for (auto e : n.ports) ++occ[e];
  }
  std::multiset<std::string> s;
  for (const auto& n : m.nodes()) {
    const auto& k = KindTable::standard().at(n.kind);
    for (std::size_t i = 0; i < n.ports.size(); ++i) {
      if (occ[n.ports[i]] == 1) s.insert(std::string(to_string(k.slots[i].dir)) + ":" + m.edge_name(n.ports[i]));
    }
  }
  return s;
}

}  // namespace

TEST_CASE("mt19937_64 reference value") {
  Rng r(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = r.next();
  CHECK(v == 9981545732273789042ULL);
  Rng u(7);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform_positive();
    REQUIRE(x > 0.0);
    REQUIRE(x <= 1.0);
  }
}

TEST_CASE("weights parsing and validation") {
  auto w = parse_weights("BETA=0,FO-FOE=2.5");
  CHECK(w.at("BETA") == 0.0);
  CHECK(w.at("FO-FOE") == 2.5);
  CHECK(parse_weights("").empty());
  CHECK_THROWS_AS(parse_weights("BETA"), std::invalid_argument);
  CHECK_THROWS_AS(parse_weights("BETA=x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_weights("BETA=1x"), std::invalid_argument);
  ReductionConfig cfg;
  cfg.weights["BETA"] = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.weights.clear();
  cfg.max_cycles = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(parse_strategy("weighted-random") == Strategy::weighted_random);
  CHECK(parse_strategy("deterministic-greedy") == Strategy::deterministic_greedy);
  CHECK_FALSE(parse_strategy("random").has_value());
}

TEST_CASE("beta on a redex") {
  auto m = mol("L a b c\nA c d e");
  auto found = find_matches(m, v2());
  REQUIRE(found.size() == 1);
  CHECK(found[0] == Match{"BETA", 0, 1, "c"});
  auto after = apply_matches(m, found, v2());
  CHECK(serialize_mol(after) == "Arrow a e\nArrow d b\n");
  CHECK(after.nodes()[0].id == 2);
  CHECK(after.nodes()[1].id == 3);
  CHECK_THROWS_AS(apply_matches(after, found, v2()), StaleMatchError);
}

TEST_CASE("comb fuses arrows") {
  CHECK(serialize_mol(comb_pass(mol("L a b c\nArrow c d\nArrow d e\nA e f g"))) == "L a b c\nA c f g\n");
  CHECK(serialize_mol(comb_pass(mol("Arrow a b\nArrow b c"))) == "Arrow a c\n");
  CHECK(serialize_mol(comb_pass(mol("Arrow a a"))) == "Arrow a a\n");
  CHECK(serialize_mol(comb_pass(mol("Arrow a b\nArrow b a"))) == "Arrow a a\n");
  std::size_t fused = 9;
  comb_pass(mol("T a"), &fused);
  CHECK(fused == 0);
  // Dangling names are kept.
  CHECK(serialize_mol(comb_pass(mol("FRIN x\nArrow x y"))) == "FRIN y\n");
}

TEST_CASE("find_matches agrees with a naive scan") {
  std::mt19937_64 gen(41);
  for (const auto* name : {"chemlambda-v2", "diric"}) {
    const auto& c = builtin_chemistry(name);
    for (int i = 0; i < 500; ++i) {
      auto m = testing::random_molecule(gen, c.kinds(), 1 + gen() % 20, {}, 0.9);
      REQUIRE(find_matches(m, c) == naive_matches(m, c));
    }
  }
  Molecule bad;
  bad.add_node("Q", std::vector<std::string>{"a"});
  CHECK_THROWS_AS(find_matches(bad, v2()), KindError);
}

TEST_CASE("a chemlambda v2 molecule with a conflict") {
  // The FO node's input is produced by L.ro and its output feeds an FOE.
  auto m = mol("L a b c\nFO c e d\nFOE d f g");
  auto found = find_matches(m, v2());
  REQUIRE(found.size() == 2);
  auto pairs = conflicting_pairs(found);
  REQUIRE(pairs.size() == 1);
  Rng rng(0);
  auto chosen = resolve_conflicts(found, v2(), ReductionConfig{}, rng);
  REQUIRE(chosen.size() == 1);
  CHECK(chosen[0] == found[0]);
}

TEST_CASE("dirIC matches never overlap") {
  const auto& d = builtin_chemistry("diric");
  std::mt19937_64 gen(42);
  std::size_t with_matches = 0;
  for (int i = 0; i < 1000; ++i) {
    auto m = testing::random_molecule(gen, d.kinds(), 2 + gen() % 30, {"L", "A", "FI", "FOE", "FO", "T"}, 0.95);
    auto found = find_matches(m, d);
    with_matches += found.size() >= 2;
    REQUIRE(conflicting_pairs(found).empty());
  }
  CHECK(with_matches > 300);
}

TEST_CASE("resolution is a maximal disjoint subset") {
  std::mt19937_64 gen(43);
  for (int i = 0; i < 400; ++i) {
    auto m = testing::random_molecule(gen, KindTable::standard(), 2 + gen() % 25, {}, 0.95);
    auto found = find_matches(m, v2());
    ReductionConfig cfg;
    if (i % 2) {
      cfg.strategy = Strategy::weighted_random;
      cfg.seed = gen();
    }
    Rng rng(cfg.seed);
    auto chosen = resolve_conflicts(found, v2(), cfg, rng);
    std::set<NodeId> used;
    for (const auto& mt : chosen) {
      REQUIRE(std::find(found.begin(), found.end(), mt) != found.end());
      REQUIRE(used.insert(mt.out_node).second);
      REQUIRE(used.insert(mt.in_node).second);
    }
    for (const auto& mt : found) {
      REQUIRE((used.contains(mt.out_node) || used.contains(mt.in_node)));
    }
    if (cfg.strategy == Strategy::deterministic_greedy) {
      // Oracle: first-fit in canonical order.
      std::set<NodeId> taken;
      std::vector<Match> expect;
      for (const auto& mt : found) {
        if (taken.contains(mt.out_node) || taken.contains(mt.in_node)) continue;
        taken.insert(mt.out_node);
        taken.insert(mt.in_node);
        expect.push_back(mt);
      }
      REQUIRE(chosen == expect);
    }
  }
}

TEST_CASE("weighted sampling follows the weights") {
  // Two matches sharing the FO node: L-FO on edge c, FO-FOE on edge d.
  auto m = mol("L a b c\nFO c e d\nFOE d f g");
  auto found = find_matches(m, v2());
  REQUIRE(found.size() == 2);
  ReductionConfig cfg;
  cfg.strategy = Strategy::weighted_random;
  cfg.weights = {{"L-FO", 1.0}, {"FO-FOE", 3.0}};
  Rng rng(99);
  int heavy = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) heavy += resolve_conflicts(found, v2(), cfg, rng).at(0).rule == "FO-FOE";
  // P(heavier key first) = 3/4; 5 sigma is about 0.015.
  CHECK(std::abs(heavy / double(n) - 0.75) < 0.015);

  cfg.weights = {{"FO-FOE", 0.0}};
  for (int i = 0; i < 100; ++i) {
    auto c = resolve_conflicts(found, v2(), cfg, rng);
    REQUIRE(c.size() == 1);
    REQUIRE(c[0].rule == "L-FO");
  }
}

TEST_CASE("cycles keep the boundary and are deterministic") {
  std::mt19937_64 gen(44);
  for (int i = 0; i < 300; ++i) {
    auto m = testing::random_molecule(gen, KindTable::standard(), 2 + gen() % 15, {}, 0.9);
    ReductionConfig cfg;
    cfg.max_cycles = 30;
    if (i % 2) {
      cfg.strategy = Strategy::weighted_random;
      cfg.seed = gen();
    }
    Rng rng(cfg.seed);
    Molecule cur = comb_pass(m);
    const auto before = boundary_multiset(cur);
    for (std::size_t k = 1; k <= 10; ++k) {
      auto r = cycle(cur, v2(), cfg, rng, k);
      REQUIRE(boundary_multiset(r.molecule) == before);
      REQUIRE(validate(r.molecule, KindTable::standard()).ok());
      cur = std::move(r.molecule);
    }
    // DIST rules can double a molecule every cycle; keep the replay short.
    cfg.max_cycles = 12;
    REQUIRE(trace_to_string(reduce(m, v2(), cfg)) == trace_to_string(reduce(m, v2(), cfg)));
  }
}

TEST_CASE("reduce statuses") {
  ReductionConfig cfg;
  auto t = reduce(mol("L a b c\nA c d e"), v2(), cfg);
  CHECK(t.status == TerminalStatus::normal_form);
  CHECK(t.cycles.size() == 1);
  CHECK(serialize_mol(t.final_molecule) == "Arrow a e\nArrow d b\n");

  auto nothing = reduce(mol("T a"), v2(), cfg);
  CHECK(nothing.status == TerminalStatus::normal_form);
  CHECK(nothing.cycles.empty());

  cfg.strategy = Strategy::weighted_random;
  cfg.weights["BETA"] = 0;
  auto stalled = reduce(mol("L a b c\nA c d e"), v2(), cfg);
  CHECK(stalled.status == TerminalStatus::stalled);
  CHECK(stalled.cycles.empty());

  // (\x.x x)(\x.x x)
  auto omega = mol("L a1 x1 f1\nFO x1 p1 q1\nA p1 q1 a1\nL a2 x2 f2\nFO x2 p2 q2\nA p2 q2 a2\nA f1 f2 r");
  ReductionConfig g;
  g.max_cycles = 40;
  auto o = reduce(omega, v2(), g);
  CHECK(o.status == TerminalStatus::max_cycles);
  CHECK(o.cycles.size() == 40);
  ReduceOptions rec;
  rec.stop_on_recurrence = true;
  CHECK(reduce(mol("L a b c\nA c d e"), v2(), ReductionConfig{}, rec).status == TerminalStatus::normal_form);
}

TEST_CASE("trace format") {
  ReductionConfig cfg;
  cfg.seed = 3;
  auto t = reduce(mol("L a b c\nA c d e"), v2(), cfg);
  t.annotations.push_back({1, "hello"});
  std::istringstream in(trace_to_string(t));
  std::vector<nlohmann::json> recs;
  for (std::string line; std::getline(in, line);) recs.push_back(nlohmann::json::parse(line));
  REQUIRE(recs.size() == 4);
  CHECK(recs[0]["record"] == "header");
  CHECK(recs[0]["chemistry"] == "chemlambda-v2");
  CHECK(recs[0]["strategy"] == "deterministic-greedy");
  CHECK(recs[0]["seed"] == 3);
  CHECK(recs[0]["initial"] == "L a b c\nA c d e\n");
  CHECK(recs[1] == nlohmann::json{{"record", "annotation"}, {"before_cycle", 1}, {"text", "hello"}});
  CHECK(recs[2]["record"] == "cycle");
  CHECK(recs[2]["cycle"] == 1);
  CHECK(recs[2]["found"] == 1);
  CHECK(recs[2]["applied"][0]["rule"] == "BETA");
  CHECK(recs[2]["applied"][0]["edge"] == "c");
  CHECK(recs[2]["applied"][0]["nodes"] == nlohmann::json{0, 1});
  CHECK(recs[2]["rules"] == nlohmann::json{{"BETA", 1}});
  CHECK(recs[2]["counts"] == nlohmann::json{{"Arrow", 2}});
  CHECK(recs[3]["record"] == "end");
  CHECK(recs[3]["status"] == "normal-form");
  CHECK(recs[3]["cycles"] == 1);
  CHECK(recs[3]["final"] == "Arrow a e\nArrow d b\n");

  std::ostringstream csv;
  write_stats_csv(csv, stats(t));
  CHECK(csv.str() == "cycle,found,applied,kind:A,kind:Arrow,kind:L,rule:BETA\n1,1,1,0,2,0,1\n");
}

TEST_CASE("quine_check") {
  auto q = mol("FI e1 e3 e0\nFO e6 e1 e2\nFO e5 e3 e4\nFOE e2 e5 e6\nT e0\nT e4");
  ReductionConfig cfg;
  auto r = quine_check(q, v2(), cfg, 4);
  CHECK(r.detected);
  CHECK(r.period == 1);
  CHECK_FALSE(quine_check(mol("L a b c\nA c d e"), v2(), cfg, 10).detected);
  CHECK_FALSE(quine_check(mol("T a"), v2(), cfg, 10).detected);
  cfg.strategy = Strategy::weighted_random;
  CHECK_THROWS_AS(quine_check(q, v2(), cfg, 4), std::invalid_argument);
  ReduceOptions rec;
  rec.stop_on_recurrence = true;
  auto t = reduce(q, v2(), ReductionConfig{}, rec);
  CHECK(t.status == TerminalStatus::quine_detected);
  CHECK(t.cycles.size() == 1);
}

TEST_CASE("an A node in a BETA and an A-FOE pattern") {
  auto m = mol("L a b x\nA x c d\nFOE d e f");
  auto found = find_matches(m, v2());
  REQUIRE(found.size() == 2);
  CHECK(found[0].rule == "A-FOE");
  CHECK(found[1].rule == "BETA");
  CHECK(conflicting_pairs(found).size() == 1);
  CHECK(find_matches(Molecule{}, v2()).empty());
}

TEST_CASE("fan-in and empty application") {
  auto m = mol("FI a b x\nFOE x c d");
  auto found = find_matches(m, v2());
  REQUIRE(found.size() == 1);
  CHECK(serialize_mol(apply_matches(m, found, v2())) == "Arrow a d\nArrow b c\n");
  CHECK(serialize_mol(apply_matches(m, {}, v2())) == serialize_mol(m));
}

TEST_CASE("comb performs at most one fusion per Arrow") {
  std::mt19937_64 gen(45);
  for (int i = 0; i < 500; ++i) {
    auto m = testing::random_molecule(gen, KindTable::standard(), 1 + gen() % 20, {"Arrow", "Arrow", "L", "A", "T"}, 0.9);
    const auto arrows = kind_counts(m)["Arrow"];
    std::size_t fused = 0;
    auto c = comb_pass(m, &fused);
    REQUIRE(fused <= arrows);
    REQUIRE(c.size() == m.size() - fused);
    REQUIRE(boundary(c, KindTable::standard()) == boundary(m, KindTable::standard()));
    for (const auto& n : c.nodes()) {
      if (n.kind != "Arrow") continue;
      // Survivors are loops or Arrows dangling at both ends.
      std::size_t uses = 0;
      for (const auto& o : c.nodes()) {
        for (auto e : o.ports) uses += (e == n.ports[0] || e == n.ports[1]);
      }
      REQUIRE((n.ports[0] == n.ports[1] || uses == 2));
    }
  }
}

TEST_CASE("seeded resolution replays and dirIC lists pass through") {
  auto m = mol("L a b c\nFO c e d\nFOE d f g\nL h i j\nA j k l\nFOE l m n");
  auto found = find_matches(m, v2());
  ReductionConfig cfg;
  cfg.strategy = Strategy::weighted_random;
  cfg.seed = 1234;
  Rng first(cfg.seed);
  const auto expect = resolve_conflicts(found, v2(), cfg, first);
  for (int i = 0; i < 100; ++i) {
    Rng r(cfg.seed);
    REQUIRE(resolve_conflicts(found, v2(), cfg, r) == expect);
  }
  const auto& d = builtin_chemistry("diric");
  std::mt19937_64 gen(46);
  for (int i = 0; i < 200; ++i) {
    auto dm = testing::random_molecule(gen, d.kinds(), 2 + gen() % 20, {"L", "A", "FI", "FOE", "T"}, 0.95);
    auto df = find_matches(dm, d);
    cfg.seed = gen();
    Rng r(cfg.seed);
    auto chosen = resolve_conflicts(df, d, cfg, r);
    std::sort(chosen.begin(), chosen.end(), [](const Match& a, const Match& b) { return a.edge < b.edge; });
    REQUIRE(chosen == df);
    Rng g(0);
    REQUIRE(resolve_conflicts(df, d, ReductionConfig{}, g) == df);
  }
}

TEST_CASE("identity applied to identity") {
  const auto& k = KindTable::standard();
  auto m = close_boundary(lambda::to_molecule(lambda::parse_lambda("(\\x.x) (\\y.y)")), k);
  Rng rng(0);
  auto r = cycle(comb_pass(m), v2(), ReductionConfig{}, rng, 1);
  REQUIRE(r.report.applied.size() == 1);
  CHECK(r.report.applied[0].rule == "BETA");
  CHECK(isomorphic(r.molecule, close_boundary(lambda::to_molecule(lambda::parse_lambda("\\y.y")), k)));
  Rng again(0);
  auto idle = cycle(r.molecule, v2(), ReductionConfig{}, again, 2);
  CHECK(idle.report.found.empty());
  CHECK(serialize_mol(idle.molecule) == serialize_mol(r.molecule));
}

TEST_CASE("SKK and Omega") {
  const auto& k = KindTable::standard();
  auto lib = [](std::string_view s) { return lambda::expand_library(lambda::parse_lambda(s)); };
  auto skk = close_boundary(lambda::to_molecule(lib("S K K")), k);
  auto t = reduce(skk, v2(), ReductionConfig{});
  CHECK(t.status == TerminalStatus::normal_form);
  CHECK(isomorphic(testing::root_part(t.final_molecule), close_boundary(lambda::to_molecule(lib("I")), k)));
  // What is left besides is one FRIN feeding a T, from pruning an unused binder.
  CHECK(t.final_molecule.size() == 4);
  // The oracle needs at least two beta steps, so the graph does too.
  testing::DeBruijnOracle oracle;
  CHECK(oracle.steps_to_normal_form(lib("S K K"), 100) >= 2);
  CHECK(stats(t).rule_totals["BETA"] >= 2);
  CHECK_FALSE(quine_check(comb_pass(skk), v2(), ReductionConfig{}, 20).detected);

  auto omega = close_boundary(lambda::to_molecule(lib("Omega")), k);
  auto o = reduce(omega, v2(), ReductionConfig{});
  CHECK(o.status == TerminalStatus::max_cycles);
  CHECK(o.cycles.size() == 1000);
  for (const auto& r : o.cycles) REQUIRE(!r.applied.empty());
}

TEST_CASE("stats of a trace without cycles") {
  auto t = reduce(mol("T a"), v2(), ReductionConfig{});
  std::ostringstream csv;
  write_stats_csv(csv, stats(t));
  CHECK(csv.str() == "cycle,found,applied,kind:T\n");
}
