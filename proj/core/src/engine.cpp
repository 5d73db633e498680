#include "chemlambda/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "chemlambda/iso.hpp"
#include "chemlambda/mol_format.hpp"

namespace chemlambda {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct End {
  std::size_t node = kNone;
  std::size_t slot = 0;
};

}  // namespace

std::string_view to_string(Strategy s) {
  return s == Strategy::deterministic_greedy ? "deterministic-greedy" : "weighted-random";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  if (s == "deterministic-greedy") return Strategy::deterministic_greedy;
  if (s == "weighted-random") return Strategy::weighted_random;
  return std::nullopt;
}

void ReductionConfig::validate() const {
  if (max_cycles == 0) throw std::invalid_argument("max-cycles must be at least 1");
  for (const auto& [rule, w] : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weight for " + rule + " must be a finite number >= 0");
    }
  }
}

double ReductionConfig::weight(const Chemistry& c, const std::string& rule) const {
  if (auto it = weights.find(rule); it != weights.end()) return it->second;
  return c.default_weight(rule);
}

std::map<std::string, double> parse_weights(std::string_view text) {
  std::map<std::string, double> out;
  std::stringstream in{std::string(text)};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("weight '" + item + "' is not RULE=VALUE");
    double w = 0;
    std::size_t used = 0;
    try {
      w = std::stod(item.substr(eq + 1), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("weight '" + item + "' has no numeric value");
    }
    if (used != item.size() - eq - 1) throw std::invalid_argument("weight '" + item + "' has trailing characters");
    out[item.substr(0, eq)] = w;
  }
  return out;
}

std::vector<Match> find_matches(const Molecule& m, const Chemistry& c) {
  const auto& nodes = m.nodes();
  const auto& table = c.kinds().kinds();
  std::vector<std::size_t> kind(nodes.size());
  std::vector<End> in_end(m.edge_capacity());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto k = c.kind_index(nodes[i].kind);
    if (!k) throw KindError("unknown node kind " + nodes[i].kind);
    kind[i] = *k;
    for (std::size_t s = 0; s < nodes[i].ports.size(); ++s) {
      if (table[*k].slots[s].dir == Direction::in) in_end[nodes[i].ports[s]] = End{i, s};
    }
  }
  std::vector<Match> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t s = 0; s < nodes[i].ports.size(); ++s) {
      if (table[kind[i]].slots[s].dir != Direction::out) continue;
      const auto e = nodes[i].ports[s];
      const auto& to = in_end[e];
      if (to.node == kNone) continue;
      if (const auto* r = c.rule_at(kind[i], s, kind[to.node], to.slot)) {
        out.push_back(Match{r->name, nodes[i].id, nodes[to.node].id, m.edge_name(e)});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Match& a, const Match& b) { return a.edge < b.edge; });
  return out;
}

std::vector<Match> resolve_conflicts(std::span<const Match> matches, const Chemistry& c, const ReductionConfig& cfg,
                                     Rng& rng) {
  std::vector<std::size_t> order;
  if (cfg.strategy == Strategy::deterministic_greedy) {
    order.resize(matches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  } else {
    // One draw per match, in canonical order, so the stream consumed does
    // not depend on the weights.
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      const double u = rng.uniform_positive();
      const double w = cfg.weight(c, matches[i].rule);
      if (w <= 0.0) continue;
      keyed.emplace_back(std::log(u) / w, i);
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [k, i] : keyed) order.push_back(i);
  }

  std::vector<NodeId> ids;
  ids.reserve(2 * matches.size());
  for (const auto& mt : matches) {
    ids.push_back(mt.out_node);
    ids.push_back(mt.in_node);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  auto slot = [&](NodeId id) { return std::lower_bound(ids.begin(), ids.end(), id) - ids.begin(); };
  std::vector<char> used(ids.size(), 0);
  std::vector<Match> chosen;
  for (auto i : order) {
    const auto& mt = matches[i];
    const auto a = slot(mt.out_node);
    const auto b = slot(mt.in_node);
    if (used[a] || used[b]) continue;
    used[a] = used[b] = 1;
    chosen.push_back(mt);
  }
  return chosen;
}

std::vector<std::pair<Match, Match>> conflicting_pairs(std::span<const Match> matches) {
  std::vector<std::pair<Match, Match>> out;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    for (std::size_t j = i + 1; j < matches.size(); ++j) {
      const auto& a = matches[i];
      const auto& b = matches[j];
      if (a.out_node == b.out_node || a.out_node == b.in_node || a.in_node == b.out_node || a.in_node == b.in_node) {
        out.emplace_back(a, b);
      }
    }
  }
  return out;
}

namespace {

void apply_in_place(Molecule& m, std::span<const Match> chosen, const Chemistry& c) {
  if (chosen.empty()) return;
  auto& nodes = m.nodes();
  std::vector<std::pair<NodeId, std::size_t>> pos(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) pos[i] = {nodes[i].id, i};
  std::sort(pos.begin(), pos.end());
  auto locate = [&](NodeId id) -> std::size_t {
    auto it = std::lower_bound(pos.begin(), pos.end(), std::pair<NodeId, std::size_t>{id, 0});
    return it != pos.end() && it->first == id ? it->second : kNone;
  };

  struct Located {
    const RewriteRule* rule;
    std::array<std::size_t, 2> at;
  };
  std::vector<Located> located;
  located.reserve(chosen.size());
  const auto original = nodes.size();
  std::vector<char> removed(original, 0);
  for (const auto& mt : chosen) {
    const auto* r = c.find_rule(mt.rule);
    if (r == nullptr) throw StaleMatchError("match names unknown rule " + mt.rule);
    const auto a = locate(mt.out_node);
    const auto b = locate(mt.in_node);
    if (a == kNone || b == kNone) throw StaleMatchError("match " + mt.rule + " refers to a missing node");
    const auto& na = nodes[a];
    const auto& nb = nodes[b];
    if (na.kind != r->lhs[0].kind || nb.kind != r->lhs[1].kind || m.edge_name(na.ports.at(r->lhs[0].slot)) != mt.edge ||
        m.edge_name(nb.ports.at(r->lhs[1].slot)) != mt.edge) {
      throw StaleMatchError("match " + mt.rule + " on edge " + mt.edge + " no longer fits the molecule");
    }
    for (auto p : {a, b}) {
      if (removed[p]) throw std::invalid_argument("apply_matches: chosen matches overlap");
      removed[p] = 1;
    }
    located.push_back(Located{r, {a, b}});
  }

  std::vector<EdgeId> fresh;
  for (const auto& loc : located) {
    fresh.clear();
    for (std::size_t k = 0; k < loc.rule->fresh_edges; ++k) fresh.push_back(m.fresh_edge());
    for (const auto& tn : loc.rule->rhs) {
      std::vector<EdgeId> ports;
      ports.reserve(tn.ports.size());
      for (const auto& tp : tn.ports) {
        ports.push_back(tp.source == TemplatePort::Source::fresh ? fresh[tp.fresh] : nodes[loc.at[tp.side]].ports[tp.slot]);
      }
      m.add_node(tn.kind, std::move(ports));
    }
  }

  std::size_t w = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i < original && removed[i]) continue;
    if (w != i) nodes[w] = std::move(nodes[i]);
    ++w;
  }
  nodes.resize(w);
}

std::size_t comb_in_place(Molecule& out) {
  auto& nodes = out.nodes();
  std::vector<std::array<End, 2>> occ(out.edge_capacity());
  auto add_occ = [&](EdgeId e, End at) {
    auto& o = occ[e];
    if (o[0].node == kNone) {
      o[0] = at;
    } else {
      o[1] = at;
    }
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t s = 0; s < nodes[i].ports.size(); ++s) add_occ(nodes[i].ports[s], End{i, s});
  }
  auto other = [&](EdgeId e, std::size_t node, std::size_t slot) -> End {
    for (const auto& o : occ[e]) {
      if (o.node != kNone && (o.node != node || o.slot != slot)) return o;
    }
    return End{};
  };
  auto replace = [&](EdgeId e, std::size_t node, std::size_t slot, End with) {
    for (auto& o : occ[e]) {
      if (o.node == node && o.slot == slot) o = with;
    }
  };

  std::size_t fused = 0;
  std::vector<char> removed(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind != "Arrow") continue;
    const EdgeId a = nodes[i].ports[0];
    const EdgeId b = nodes[i].ports[1];
    if (a == b) continue;
    if (auto consumer = other(b, i, 1); consumer.node != kNone) {
      nodes[consumer.node].ports[consumer.slot] = a;
      replace(a, i, 0, consumer);
      occ[b] = {};
    } else if (auto producer = other(a, i, 0); producer.node != kNone) {
      nodes[producer.node].ports[producer.slot] = b;
      replace(b, i, 1, producer);
      occ[a] = {};
    } else {
      continue;
    }
    removed[i] = 1;
    ++fused;
  }
  if (fused > 0) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (removed[i]) continue;
      if (w != i) nodes[w] = std::move(nodes[i]);
      ++w;
    }
    nodes.resize(w);
  }
  return fused;
}

}  // namespace

Molecule apply_matches(const Molecule& m, std::span<const Match> chosen, const Chemistry& c) {
  Molecule out = m;
  apply_in_place(out, chosen, c);
  return out;
}

Molecule comb_pass(const Molecule& m, std::size_t* fusions) {
  Molecule out = m;
  const auto fused = comb_in_place(out);
  if (fusions != nullptr) *fusions = fused;
  return out;
}

CycleResult cycle(Molecule m, const Chemistry& c, const ReductionConfig& cfg, Rng& rng, std::size_t index) {
  CycleResult r;
  r.report.index = index;
  r.report.found = find_matches(m, c);
  r.report.applied = resolve_conflicts(r.report.found, c, cfg, rng);
  for (const auto& mt : r.report.applied) ++r.report.rule_histogram[mt.rule];
  if (!r.report.applied.empty()) {
    apply_in_place(m, r.report.applied, c);
    comb_in_place(m);
    if (m.edge_capacity() > 2 * 3 * m.size() + 64) m.compact();
  }
  r.report.kind_counts = kind_counts(m);
  r.molecule = std::move(m);
  return r;
}

std::string_view to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::normal_form:
      return "normal-form";
    case TerminalStatus::max_cycles:
      return "max-cycles";
    case TerminalStatus::quine_detected:
      return "quine-detected";
    case TerminalStatus::stalled:
      return "stalled";
  }
  return "?";
}

namespace {

void check_disjoint(const CycleReport& r) {
  std::unordered_set<NodeId> seen;
  for (const auto& mt : r.applied) {
    if (!seen.insert(mt.out_node).second || !seen.insert(mt.in_node).second) {
      throw InvariantError("cycle " + std::to_string(r.index) + " applied overlapping matches");
    }
  }
}

}  // namespace

Trace reduce(const Molecule& m, const Chemistry& c, const ReductionConfig& cfg, ReduceOptions options) {
  cfg.validate();
  Trace t;
  t.chemistry = c.name();
  t.config = cfg;
  t.initial = m;

  Rng rng(cfg.seed);
  Molecule cur = comb_pass(m);
  const auto bound = boundary(cur, c.kinds());
  std::optional<std::string> start_code;
  if (options.stop_on_recurrence) start_code = canonical_code(cur);

  t.status = TerminalStatus::max_cycles;
  for (std::size_t i = 1; i <= cfg.max_cycles; ++i) {
    auto r = cycle(std::move(cur), c, cfg, rng, i);
    cur = std::move(r.molecule);
    if (r.report.found.empty()) {
      t.status = TerminalStatus::normal_form;
      break;
    }
    if (r.report.applied.empty()) {
      t.status = TerminalStatus::stalled;
      break;
    }
    check_disjoint(r.report);
    if (boundary(cur, c.kinds()) != bound) {
      throw InvariantError("cycle " + std::to_string(i) + " changed the free boundary");
    }
    t.cycles.push_back(std::move(r.report));
    if (start_code && canonical_code(cur) == start_code) {
      t.status = TerminalStatus::quine_detected;
      break;
    }
  }
  if (t.status == TerminalStatus::max_cycles && find_matches(cur, c).empty()) t.status = TerminalStatus::normal_form;
  t.final_molecule = std::move(cur);
  return t;
}

QuineResult quine_check(const Molecule& m, const Chemistry& c, const ReductionConfig& cfg, std::size_t horizon) {
  if (cfg.strategy != Strategy::deterministic_greedy) {
    throw std::invalid_argument("quine_check needs the deterministic-greedy strategy");
  }
  const auto start = canonical_code(m);
  if (!start) throw std::length_error("quine_check: molecule exceeds the isomorphism size cap");
  Rng rng(cfg.seed);
  Molecule cur = m;
  for (std::size_t p = 1; p <= horizon; ++p) {
    auto r = cycle(std::move(cur), c, cfg, rng, p);
    if (r.report.applied.empty()) return {};
    auto code = canonical_code(r.molecule);
    if (!code) throw std::length_error("quine_check: molecule exceeds the isomorphism size cap");
    if (*code == *start) return {true, p};
    cur = std::move(r.molecule);
  }
  return {};
}

bool check_shuffle(const Chemistry& c) {
  if (c.find_rule("FO-FOE") == nullptr) throw ChemistryError("check_shuffle: chemistry has no FO-FOE rule");
  if (c.find_rule("FI-FOE") == nullptr) throw ChemistryError("check_shuffle: chemistry has no FI-FOE rule");
  const auto lhs = parse_mol("FO 1 2 c\nFOE c 3 4\nFOE 2 5 6\n", c.kinds());
  const auto rhs = parse_mol("FOE 1 k l\nFO k 5 3\nFO l 6 4\n", c.kinds());

  auto step = [&](const Molecule& m, std::string_view rule) -> std::optional<Molecule> {
    std::vector<Match> picked;
    for (auto& mt : find_matches(m, c)) {
      if (mt.rule == rule) picked.push_back(mt);
    }
    if (picked.empty()) return std::nullopt;
    return apply_matches(m, picked, c);
  };
  auto mid = step(lhs, "FO-FOE");
  if (!mid) return false;
  auto fin = step(*mid, "FI-FOE");
  if (!fin) return false;
  return isomorphic(comb_pass(*fin), rhs, IsoOptions{BoundaryNames::fixed});
}

}  // namespace chemlambda
