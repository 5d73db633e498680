#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "chemlambda/molecule.hpp"

namespace chemlambda {

class MolParseError : public std::runtime_error {
 public:
  MolParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct MolParseOptions {
  /// Reject an edge that appears twice in slots of the same direction.
  /// Disable to load malformed files for validate().
  bool check_directions = true;
};

/// One node per line: a kind token followed by one edge token per slot.
/// '#' starts a comment; blank lines are ignored. Nodes get ids 0..n-1.
Molecule parse_mol(std::string_view text, const KindTable& kinds, MolParseOptions options = {});

std::string serialize_mol(const Molecule& m);

}  // namespace chemlambda
