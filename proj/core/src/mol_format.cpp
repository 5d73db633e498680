#include "chemlambda/mol_format.hpp"

#include <sstream>
#include <vector>

namespace chemlambda {

namespace {

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

struct EdgeUse {
  std::size_t count = 0;
  Direction first_dir = Direction::in;
};

}  // namespace

Molecule parse_mol(std::string_view text, const KindTable& kinds, MolParseOptions options) {
  Molecule m;
  std::vector<EdgeUse> uses;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto toks = tokens(line);
    if (toks.empty()) continue;

    const auto* kind = kinds.find(toks[0]);
    if (kind == nullptr) throw MolParseError(line_no, "unknown node kind '" + std::string(toks[0]) + "'");
    if (toks.size() - 1 != kind->arity()) {
      throw MolParseError(line_no, "kind " + kind->name + " takes " + std::to_string(kind->arity()) +
                                       " edges, got " + std::to_string(toks.size() - 1));
    }

    std::vector<EdgeId> ports;
    for (std::size_t s = 0; s < kind->arity(); ++s) {
      auto e = m.edge(toks[s + 1]);
      if (e >= uses.size()) uses.resize(e + 1);
      auto& u = uses[e];
      const auto dir = kind->slots[s].dir;
      if (u.count == 2) {
        throw MolParseError(line_no, "edge '" + std::string(toks[s + 1]) + "' used more than twice");
      }
      if (u.count == 1 && options.check_directions && u.first_dir == dir) {
        throw MolParseError(line_no, "edge '" + std::string(toks[s + 1]) + "' occurs in two " +
                                         std::string(to_string(dir)) + " slots");
      }
      if (u.count == 0) u.first_dir = dir;
      ++u.count;
      ports.push_back(e);
    }
    m.add_node(kind->name, std::move(ports));
    if (end == text.size()) break;
  }
  return m;
}

std::string serialize_mol(const Molecule& m) {
  std::ostringstream out;
  for (const auto& n : m.nodes()) {
    out << n.kind;
    for (EdgeId e : n.ports) out << ' ' << m.edge_name(e);
    out << '\n';
  }
  return out.str();
}

}  // namespace chemlambda
