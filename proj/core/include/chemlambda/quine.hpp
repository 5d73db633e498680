#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "chemlambda/chemistry.hpp"
#include "chemlambda/molecule.hpp"

namespace chemlambda {

struct QuineSearchOptions {
  std::size_t max_nodes = 6;
  std::size_t horizon = 8;
  /// Kinds the molecules are built from. Empty means every kind of the
  /// chemistry except Arrow.
  std::vector<std::string> kinds;
};

struct QuineFinding {
  Molecule molecule;
  std::size_t period = 0;
  std::string canonical;
};

struct QuineSearchResult {
  std::vector<QuineFinding> quines;  // one per isomorphism class, by size then code
  std::size_t wirings = 0;           // molecules generated
  std::size_t simulated = 0;         // molecules that had a match
};

/// Enumerates closed connected molecules of up to max_nodes nodes (every
/// out slot wired to an in slot, identical nodes generated once per
/// first-use order) and keeps those that recur up to isomorphism within
/// `horizon` deterministic-greedy cycles, each applying a rewrite.
QuineSearchResult quine_search(const Chemistry& c, const QuineSearchOptions& options = {});

}  // namespace chemlambda
