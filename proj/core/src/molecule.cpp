#include "chemlambda/molecule.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace chemlambda {

namespace {

constexpr EdgeId kNoEdge = static_cast<EdgeId>(-1);

PortSlot slot(PortRole r, Direction d) { return PortSlot{r, d}; }

}  // namespace

std::string_view to_string(PortRole role) {
  switch (role) {
    case PortRole::left:
      return "left";
    case PortRole::middle:
      return "middle";
    case PortRole::right:
      return "right";
  }
  return "?";
}

std::string_view to_string(Direction dir) { return dir == Direction::in ? "in" : "out"; }

std::string PortSlot::code() const {
  std::string s;
  s += to_string(role).front();
  s += to_string(dir).front();
  return s;
}

std::optional<std::size_t> NodeKind::slot_index(std::string_view code) const {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].code() == code) return i;
  }
  return std::nullopt;
}

KindTable::KindTable(std::vector<NodeKind> kinds) : kinds_(std::move(kinds)) {
  std::unordered_set<std::string> seen;
  for (const auto& k : kinds_) {
    if (k.name.empty()) throw KindError("empty kind name");
    if (!seen.insert(k.name).second) throw KindError("duplicate kind " + k.name);
    if (k.arity() < 1 || k.arity() > 3) {
      throw KindError("kind " + k.name + " has arity " + std::to_string(k.arity()) + ", expected 1..3");
    }
    std::unordered_set<std::string> codes;
    for (const auto& s : k.slots) {
      if (!codes.insert(s.code()).second) throw KindError("kind " + k.name + " repeats slot " + s.code());
    }
    if (k.name == "Arrow") {
      if (k.arity() != 2 || k.slots[0].dir != Direction::in || k.slots[1].dir != Direction::out) {
        throw KindError("Arrow must have exactly (in, out) slots");
      }
    }
    if ((k.name == "T" || k.name == "FRIN" || k.name == "FROUT") && k.arity() != 1) {
      throw KindError(k.name + " must be 1-valent");
    }
  }
}

const NodeKind* KindTable::find(std::string_view name) const {
  for (const auto& k : kinds_) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

const NodeKind& KindTable::at(std::string_view name) const {
  if (const auto* k = find(name)) return *k;
  throw KindError("unknown node kind " + std::string(name));
}

const KindTable& KindTable::standard() {
  using R = PortRole;
  using D = Direction;
  static const KindTable table({
      {"L", {slot(R::middle, D::in), slot(R::left, D::out), slot(R::right, D::out)}},
      {"A", {slot(R::left, D::in), slot(R::right, D::in), slot(R::middle, D::out)}},
      {"FI", {slot(R::left, D::in), slot(R::right, D::in), slot(R::middle, D::out)}},
      {"FO", {slot(R::middle, D::in), slot(R::left, D::out), slot(R::right, D::out)}},
      {"FOE", {slot(R::middle, D::in), slot(R::left, D::out), slot(R::right, D::out)}},
      {"Arrow", {slot(R::middle, D::in), slot(R::middle, D::out)}},
      {"T", {slot(R::middle, D::in)}},
      {"FRIN", {slot(R::middle, D::out)}},
      {"FROUT", {slot(R::middle, D::in)}},
  });
  return table;
}

void Molecule::index_tail() {
  for (; indexed_ < names_.size(); ++indexed_) index_.emplace(names_[indexed_], static_cast<EdgeId>(indexed_));
}

EdgeId Molecule::edge(std::string_view name) {
  index_tail();
  auto key = std::string(name);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  // Keep generated names clear of user names of the same shape.
  if (key.size() > 1 && key.size() < 19 && key[0] == '~' &&
      std::all_of(key.begin() + 1, key.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
    fresh_counter_ = std::max<std::uint64_t>(fresh_counter_, std::stoull(key.substr(1)) + 1);
  }
  auto id = static_cast<EdgeId>(names_.size());
  names_.push_back(key);
  index_.emplace(std::move(key), id);
  ++indexed_;
  return id;
}

EdgeId Molecule::fresh_edge() {
  auto id = static_cast<EdgeId>(names_.size());
  names_.push_back("~" + std::to_string(fresh_counter_++));
  return id;
}

std::optional<EdgeId> Molecule::find_edge(std::string_view name) const {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  for (std::size_t i = indexed_; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<EdgeId>(i);
  }
  return std::nullopt;
}

NodeId Molecule::add_node(std::string kind, std::vector<EdgeId> ports) {
  NodeId id = next_id_++;
  nodes_.push_back(Node{id, std::move(kind), std::move(ports)});
  return id;
}

NodeId Molecule::add_node(std::string kind, const std::vector<std::string>& edge_names) {
  std::vector<EdgeId> ports;
  ports.reserve(edge_names.size());
  for (const auto& n : edge_names) ports.push_back(edge(n));
  return add_node(std::move(kind), std::move(ports));
}

void Molecule::add_node_with_id(NodeId id, std::string kind, std::vector<EdgeId> ports) {
  nodes_.push_back(Node{id, std::move(kind), std::move(ports)});
  next_id_ = std::max(next_id_, id + 1);
}

void Molecule::compact() {
  std::vector<EdgeId> remap(names_.size(), kNoEdge);
  std::vector<std::string> names;
  for (auto& n : nodes_) {
    for (auto& e : n.ports) {
      if (remap[e] == kNoEdge) {
        remap[e] = static_cast<EdgeId>(names.size());
        names.push_back(names_[e]);
      }
      e = remap[e];
    }
  }
  names_ = std::move(names);
  index_.clear();
  indexed_ = 0;
}

Molecule Molecule::empty_copy() const {
  Molecule m;
  m.names_ = names_;
  m.index_ = index_;
  m.indexed_ = indexed_;
  m.next_id_ = next_id_;
  m.fresh_counter_ = fresh_counter_;
  return m;
}

namespace {

struct Occurrence {
  std::size_t node;
  std::size_t slot;
  Direction dir;
};

// Occurrences of every edge; assumes known kinds with matching arity.
std::vector<std::vector<Occurrence>> occurrences(const Molecule& m, const KindTable& kinds) {
  std::vector<std::vector<Occurrence>> occ(m.edge_capacity());
  for (std::size_t i = 0; i < m.nodes().size(); ++i) {
    const auto& n = m.nodes()[i];
    const auto* kind = kinds.find(n.kind);
    if (kind == nullptr || kind->arity() != n.ports.size()) continue;
    for (std::size_t s = 0; s < n.ports.size(); ++s) {
      occ[n.ports[s]].push_back({i, s, kind->slots[s].dir});
    }
  }
  return occ;
}

}  // namespace

Boundary boundary(const Molecule& m, const KindTable& kinds) {
  Boundary b;
  auto occ = occurrences(m, kinds);
  for (EdgeId e = 0; e < occ.size(); ++e) {
    if (occ[e].size() != 1) continue;
    (occ[e][0].dir == Direction::in ? b.free_in : b.free_out).push_back(m.edge_name(e));
  }
  std::sort(b.free_in.begin(), b.free_in.end());
  std::sort(b.free_out.begin(), b.free_out.end());
  return b;
}

ValidationReport validate(const Molecule& m, const KindTable& kinds) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::string msg) { report.violations.push_back({k, std::move(msg)}); };

  std::unordered_set<NodeId> ids;
  for (const auto& n : m.nodes()) {
    if (!ids.insert(n.id).second) add(ViolationKind::duplicate_node_id, "node id " + std::to_string(n.id) + " repeated");
    const auto* kind = kinds.find(n.kind);
    if (kind == nullptr) {
      add(ViolationKind::unknown_kind, "node " + std::to_string(n.id) + ": unknown kind " + n.kind);
    } else if (kind->arity() != n.ports.size()) {
      add(ViolationKind::arity_mismatch, "node " + std::to_string(n.id) + ": kind " + n.kind + " expects " +
                                             std::to_string(kind->arity()) + " edges, has " +
                                             std::to_string(n.ports.size()));
    }
  }

  auto occ = occurrences(m, kinds);
  for (EdgeId e = 0; e < occ.size(); ++e) {
    const auto& o = occ[e];
    if (o.size() > 2) {
      add(ViolationKind::overused_edge,
          "edge " + m.edge_name(e) + " used " + std::to_string(o.size()) + " times");
    } else if (o.size() == 2 && o[0].dir == o[1].dir) {
      add(ViolationKind::same_direction,
          "edge " + m.edge_name(e) + " joins two " + std::string(to_string(o[0].dir)) + " slots");
    }
  }
  return report;
}

Molecule close_boundary(const Molecule& m, const KindTable& kinds) {
  Molecule out = m;
  auto occ = occurrences(m, kinds);
  // Walk nodes and slots in order so the caps come out deterministically.
  for (const auto& n : m.nodes()) {
    for (EdgeId e : n.ports) {
      if (occ[e].size() != 1) continue;
      const bool dangling_in = occ[e][0].dir == Direction::in;
      out.add_node(dangling_in ? "FRIN" : "FROUT", std::vector<EdgeId>{e});
      occ[e].clear();
    }
  }
  return out;
}

std::map<std::string, std::size_t> kind_counts(const Molecule& m) {
  std::map<std::string, std::size_t> counts;
  for (const auto& n : m.nodes()) ++counts[n.kind];
  return counts;
}

std::vector<Molecule> connected_components(const Molecule& m) {
  const auto n = m.nodes().size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::size_t> first(m.edge_capacity(), n);
  for (std::size_t i = 0; i < n; ++i) {
    for (EdgeId e : m.nodes()[i].ports) {
      if (first[e] == n) {
        first[e] = i;
      } else {
        parent[find(i)] = find(first[e]);
      }
    }
  }
  std::vector<std::size_t> slot_of(n, n);
  std::vector<Molecule> comps;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = find(i);
    if (slot_of[r] == n) {
      slot_of[r] = comps.size();
      comps.push_back(m.empty_copy());
    }
    const auto& node = m.nodes()[i];
    comps[slot_of[r]].add_node_with_id(node.id, node.kind, node.ports);
  }
  for (auto& c : comps) c.compact();
  return comps;
}

}  // namespace chemlambda
