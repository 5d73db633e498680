#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chemlambda/chemistry.hpp"
#include "chemlambda/molecule.hpp"
#include "chemlambda/rng.hpp"

namespace chemlambda {

enum class Strategy { deterministic_greedy, weighted_random };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);

struct ReductionConfig {
  Strategy strategy = Strategy::deterministic_greedy;
  std::uint64_t seed = 0;
  /// Per-rule overrides of the chemistry's default weights. Only the
  /// weighted-random strategy reads them; weight 0 disables a rule there.
  std::map<std::string, double> weights;
  std::size_t max_cycles = 1000;

  /// Throws std::invalid_argument on negative weights or max_cycles == 0.
  void validate() const;
  double weight(const Chemistry& c, const std::string& rule) const;
};

/// "BETA=0,FO-FOE=2.5" -> weights map. Throws std::invalid_argument.
std::map<std::string, double> parse_weights(std::string_view text);

/// An applicable rewrite: `edge` runs from out_node's lhs out slot to
/// in_node's lhs in slot.
struct Match {
  std::string rule;
  NodeId out_node = 0;
  NodeId in_node = 0;
  std::string edge;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Every internal edge whose endpoints form some rule's lhs, sorted by edge
/// name.
std::vector<Match> find_matches(const Molecule& m, const Chemistry& c);

/// A maximal node-disjoint subset. Greedy keeps canonical order; weighted
/// random first orders matches by seeded weighted sampling without
/// replacement (keys log(u)/w) and drops zero-weight rules.
std::vector<Match> resolve_conflicts(std::span<const Match> matches, const Chemistry& c, const ReductionConfig& cfg,
                                     Rng& rng);

/// Pairs of matches that share a node.
std::vector<std::pair<Match, Match>> conflicting_pairs(std::span<const Match> matches);

class StaleMatchError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Replaces each lhs pair by its rhs template. Survivors keep their order
/// and ids; rhs nodes are appended in match order with new ids.
Molecule apply_matches(const Molecule& m, std::span<const Match> chosen, const Chemistry& c);

/// Fuses Arrow nodes into their neighbours until only Arrows with both ends
/// dangling or self-loop Arrows remain. Dangling edge names survive.
Molecule comb_pass(const Molecule& m, std::size_t* fusions = nullptr);

struct CycleReport {
  std::size_t index = 0;
  std::vector<Match> found;
  std::vector<Match> applied;
  std::map<std::string, std::size_t> rule_histogram;
  std::map<std::string, std::size_t> kind_counts;
};

struct CycleResult {
  Molecule molecule;
  CycleReport report;
};

/// find_matches -> resolve_conflicts -> apply_matches -> comb_pass.
CycleResult cycle(Molecule m, const Chemistry& c, const ReductionConfig& cfg, Rng& rng, std::size_t index);

enum class TerminalStatus { normal_form, max_cycles, quine_detected, stalled };

std::string_view to_string(TerminalStatus s);

/// Free-text marker attached to the trace before a given cycle; used for
/// steering commands in live sessions.
struct Annotation {
  std::size_t before_cycle = 0;
  std::string text;
};

struct Trace {
  std::string chemistry;
  ReductionConfig config;
  Molecule initial;
  std::vector<CycleReport> cycles;
  Molecule final_molecule;
  TerminalStatus status = TerminalStatus::normal_form;
  std::vector<Annotation> annotations;
};

struct ReduceOptions {
  /// Stop with quine_detected when the molecule returns to the (combed)
  /// initial molecule up to isomorphism.
  bool stop_on_recurrence = false;
};

class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Drives cycles from a combed copy of m until normal form or max_cycles.
/// Throws InvariantError if a cycle changes the boundary or applies
/// overlapping matches.
Trace reduce(const Molecule& m, const Chemistry& c, const ReductionConfig& cfg, ReduceOptions options = {});

/// Line-delimited JSON: a header record, one record per cycle, an end record.
void write_trace(std::ostream& out, const Trace& t);
std::string trace_to_string(const Trace& t);

struct StatsRow {
  std::size_t cycle = 0;
  std::size_t found = 0;
  std::size_t applied = 0;
  std::map<std::string, std::size_t> kind_counts;
  std::map<std::string, std::size_t> rule_counts;
};

struct Stats {
  std::vector<std::string> kinds;
  std::vector<std::string> rules;
  std::vector<StatsRow> rows;
  std::map<std::string, std::size_t> rule_totals;
};

Stats stats(const Trace& t);
void write_stats_csv(std::ostream& out, const Stats& s);

struct QuineResult {
  bool detected = false;
  std::size_t period = 0;
};

/// Quine at period p iff p greedy cycles, each applying at least one
/// rewrite, bring m back to an isomorphic molecule. Requires the
/// deterministic-greedy strategy.
QuineResult quine_check(const Molecule& m, const Chemistry& c, const ReductionConfig& cfg, std::size_t horizon);

/// Applies FO-FOE and then FI-FOE (then COMB) to the pattern
///   FO 1 2 c, FOE c 3 4, FOE 2 5 6
/// and checks the result is FOE 1 k l, FO k 5 3, FO l 6 4 with the
/// dangling names fixed. Throws ChemistryError when either rule is missing.
bool check_shuffle(const Chemistry& c);

}  // namespace chemlambda
