#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "chemlambda/engine.hpp"
#include "chemlambda/mol_format.hpp"

namespace chemlambda {

using ojson = nlohmann::ordered_json;

namespace {

ojson counts_json(const std::map<std::string, std::size_t>& m) {
  ojson j = ojson::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

}  // namespace

void write_trace(std::ostream& out, const Trace& t) {
  ojson header;
  header["record"] = "header";
  header["chemistry"] = t.chemistry;
  header["strategy"] = to_string(t.config.strategy);
  header["seed"] = t.config.seed;
  header["max_cycles"] = t.config.max_cycles;
  ojson weights = ojson::object();
  for (const auto& [k, v] : t.config.weights) weights[k] = v;
  header["weights"] = weights;
  header["initial"] = serialize_mol(t.initial);
  out << header.dump() << '\n';

  auto note = t.annotations.begin();
  for (const auto& r : t.cycles) {
    for (; note != t.annotations.end() && note->before_cycle <= r.index; ++note) {
      out << ojson{{"record", "annotation"}, {"before_cycle", note->before_cycle}, {"text", note->text}}.dump() << '\n';
    }
    ojson rec;
    rec["record"] = "cycle";
    rec["cycle"] = r.index;
    rec["found"] = r.found.size();
    ojson applied = ojson::array();
    for (const auto& m : r.applied) {
      applied.push_back(ojson{{"rule", m.rule}, {"nodes", {m.out_node, m.in_node}}, {"edge", m.edge}});
    }
    rec["applied"] = applied;
    rec["rules"] = counts_json(r.rule_histogram);
    rec["counts"] = counts_json(r.kind_counts);
    out << rec.dump() << '\n';
  }
  for (; note != t.annotations.end(); ++note) {
    out << ojson{{"record", "annotation"}, {"before_cycle", note->before_cycle}, {"text", note->text}}.dump() << '\n';
  }

  ojson end;
  end["record"] = "end";
  end["status"] = to_string(t.status);
  end["cycles"] = t.cycles.size();
  end["final"] = serialize_mol(t.final_molecule);
  out << end.dump() << '\n';
}

std::string trace_to_string(const Trace& t) {
  std::ostringstream s;
  write_trace(s, t);
  return s.str();
}

Stats stats(const Trace& t) {
  Stats s;
  std::set<std::string> kinds;
  std::set<std::string> rules;
  for (const auto& [k, n] : kind_counts(t.initial)) kinds.insert(k);
  for (const auto& r : t.cycles) {
    for (const auto& [k, n] : r.kind_counts) kinds.insert(k);
    for (const auto& [k, n] : r.rule_histogram) rules.insert(k);
    StatsRow row;
    row.cycle = r.index;
    row.found = r.found.size();
    row.applied = r.applied.size();
    row.kind_counts = r.kind_counts;
    row.rule_counts = r.rule_histogram;
    for (const auto& [k, n] : r.rule_histogram) s.rule_totals[k] += n;
    s.rows.push_back(std::move(row));
  }
  s.kinds.assign(kinds.begin(), kinds.end());
  s.rules.assign(rules.begin(), rules.end());
  return s;
}

void write_stats_csv(std::ostream& out, const Stats& s) {
  out << "cycle,found,applied";
  for (const auto& k : s.kinds) out << ",kind:" << k;
  for (const auto& r : s.rules) out << ",rule:" << r;
  out << '\n';
  auto get = [](const std::map<std::string, std::size_t>& m, const std::string& k) {
    auto it = m.find(k);
    return it == m.end() ? std::size_t{0} : it->second;
  };
  for (const auto& row : s.rows) {
    out << row.cycle << ',' << row.found << ',' << row.applied;
    for (const auto& k : s.kinds) out << ',' << get(row.kind_counts, k);
    for (const auto& r : s.rules) out << ',' << get(row.rule_counts, r);
    out << '\n';
  }
}

}  // namespace chemlambda
