#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "chemlambda/molecule.hpp"

namespace chemlambda {

enum class BoundaryNames {
  /// Dangling edge names are interchangeable like any other name.
  free,
  /// Dangling edges must keep their names.
  fixed,
};

struct IsoOptions {
  BoundaryNames boundary = BoundaryNames::free;
  std::size_t max_nodes = 4000;
};

enum class IsoOutcome { isomorphic, not_isomorphic, too_large };

/// Canonical code of a molecule: equal codes iff isomorphic (kind- and
/// slot-preserving). Nodes are colour-refined, then every component is
/// labelled by breadth-first traversal from each start node of its least
/// colour class and the smallest code is kept. Returns nullopt above
/// options.max_nodes.
std::optional<std::string> canonical_code(const Molecule& m, const IsoOptions& options = {});

IsoOutcome iso_check(const Molecule& a, const Molecule& b, const IsoOptions& options = {});

/// Convenience for tests: throws std::length_error on too_large.
bool isomorphic(const Molecule& a, const Molecule& b, const IsoOptions& options = {});

}  // namespace chemlambda
