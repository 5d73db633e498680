#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chemlambda/molecule.hpp"

namespace chemlambda {

class ChemistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RuleFamily { beta, fan_in, dist, prune, comb, annihilate };

std::string_view to_string(RuleFamily f);

/// One side of a rule's left-hand side: a kind and one of its slots.
struct LhsEnd {
  std::string kind;
  std::size_t slot = 0;
};

/// Where a right-hand-side slot takes its edge from.
struct TemplatePort {
  enum class Source : std::uint8_t { boundary, fresh };
  Source source = Source::boundary;
  std::size_t side = 0;   // boundary: 0 = lhs out-side node, 1 = lhs in-side node
  std::size_t slot = 0;   // boundary: slot on that lhs node
  std::size_t fresh = 0;  // fresh: index of the internal edge
};

struct TemplateNode {
  std::string kind;
  std::vector<TemplatePort> ports;
};

/// A two-node rewrite. lhs[0] is the node whose out slot carries the shared
/// edge, lhs[1] the node whose in slot receives it.
struct RewriteRule {
  std::string name;
  RuleFamily family = RuleFamily::beta;
  std::array<LhsEnd, 2> lhs;
  std::vector<TemplateNode> rhs;
  std::size_t fresh_edges = 0;
};

/// Arrow-elimination declaration. COMB rules are not matched per cycle; the
/// engine fuses Arrows in a separate pass.
struct CombRule {
  std::string name;
  std::string arrow_slot;  // "mi" or "mo"
};

class Chemistry {
 public:
  Chemistry(std::string name, KindTable kinds, std::vector<RewriteRule> rules, std::vector<CombRule> comb);

  const std::string& name() const { return name_; }
  const KindTable& kinds() const { return kinds_; }
  const std::vector<RewriteRule>& rules() const { return rules_; }
  const std::vector<CombRule>& comb_rules() const { return comb_; }

  const RewriteRule* find_rule(std::string_view name) const;
  /// Rule whose lhs joins out_kind.out_slot to in_kind.in_slot, if any.
  const RewriteRule* rule_for(std::string_view out_kind, std::size_t out_slot, std::string_view in_kind,
                              std::size_t in_slot) const;
  /// Position of a kind in kinds().kinds().
  std::optional<std::size_t> kind_index(std::string_view kind) const;
  /// rule_for by kind positions; slots must be below 3.
  const RewriteRule* rule_at(std::size_t out_kind, std::size_t out_slot, std::size_t in_kind,
                             std::size_t in_slot) const;
  std::size_t rule_index(const RewriteRule& r) const { return static_cast<std::size_t>(&r - rules_.data()); }

  /// Default weight for the weighted-random strategy (1.0 for every rule).
  double default_weight(std::string_view rule) const;

 private:
  std::string name_;
  KindTable kinds_;
  std::vector<RewriteRule> rules_;
  std::vector<CombRule> comb_;
  std::vector<int> by_lhs_;  // dense (kind, slot, kind, slot) -> rule
};

/// Parses and validates a chemistry definition. See docs/formats.md.
Chemistry load_chemistry(std::string_view definition);

/// Names of the chemistries compiled into the library.
std::vector<std::string> builtin_chemistry_names();
const Chemistry& builtin_chemistry(std::string_view name);
std::string_view builtin_chemistry_source(std::string_view name);

/// kind -> set of active slot codes. A slot is active when some non-COMB
/// rule's lhs names it.
std::map<std::string, std::set<std::string>> active_ports(const Chemistry& c);

struct KindTranslation {
  std::map<std::string, std::string> mapping;
};

/// Parses "SOURCE TARGET" lines and checks the map is total on `from` and
/// maps every kind onto one with an identical slot signature in `to`.
KindTranslation load_translation(std::string_view text, const KindTable& from, const KindTable& to);
const KindTranslation& builtin_translation(std::string_view from, std::string_view to);

Molecule translate(const Molecule& m, const KindTranslation& t);

}  // namespace chemlambda
