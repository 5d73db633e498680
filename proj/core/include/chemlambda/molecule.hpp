#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chemlambda {

enum class PortRole : std::uint8_t { left, middle, right };
enum class Direction : std::uint8_t { in, out };

/// One connection site of a node kind. Its short code is the role initial
/// followed by the direction initial, e.g. "mi" for middle/in.
struct PortSlot {
  PortRole role = PortRole::middle;
  Direction dir = Direction::in;

  std::string code() const;
  friend bool operator==(const PortSlot&, const PortSlot&) = default;
};

std::string_view to_string(PortRole role);
std::string_view to_string(Direction dir);

struct NodeKind {
  std::string name;
  std::vector<PortSlot> slots;  // mol-line order

  std::size_t arity() const { return slots.size(); }
  std::optional<std::size_t> slot_index(std::string_view code) const;
};

class KindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The set of node kinds a molecule may use. Arity is 1..3; Arrow, when
/// declared, must be (in, out); T, FRIN and FROUT must be 1-valent.
class KindTable {
 public:
  KindTable() = default;
  explicit KindTable(std::vector<NodeKind> kinds);

  const NodeKind* find(std::string_view name) const;
  const NodeKind& at(std::string_view name) const;
  const std::vector<NodeKind>& kinds() const { return kinds_; }
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  /// The chemlambda v2 node set: L, A, FI, FO, FOE, Arrow, T, FRIN, FROUT.
  static const KindTable& standard();

 private:
  std::vector<NodeKind> kinds_;
};

using NodeId = std::uint64_t;
using EdgeId = std::uint32_t;

struct Node {
  NodeId id = 0;
  std::string kind;
  std::vector<EdgeId> ports;  // one edge per signature slot
};

/// An open port graph. Edge names are interned per molecule; names beginning
/// with '~' are produced by fresh_edge() and are never reused.
class Molecule {
 public:
  EdgeId edge(std::string_view name);
  EdgeId fresh_edge();
  std::optional<EdgeId> find_edge(std::string_view name) const;
  const std::string& edge_name(EdgeId e) const { return names_.at(e); }
  std::size_t edge_capacity() const { return names_.size(); }

  NodeId add_node(std::string kind, std::vector<EdgeId> ports);
  /// Adds a node resolving edge names through edge().
  NodeId add_node(std::string kind, const std::vector<std::string>& edge_names);
  /// Adds a node with an explicit id; the id counter moves past it.
  void add_node_with_id(NodeId id, std::string kind, std::vector<EdgeId> ports);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& nodes() { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  NodeId next_node_id() const { return next_id_; }

  /// Drops interned names no longer referenced by any node. Edge ids change;
  /// names, node ids and the fresh-name counter are kept.
  void compact();

  /// A molecule sharing this one's name table and counters but no nodes.
  Molecule empty_copy() const;

 private:
  void index_tail();

  std::vector<Node> nodes_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, EdgeId> index_;  // covers names_[0, indexed_)
  std::size_t indexed_ = 0;
  NodeId next_id_ = 0;
  std::uint64_t fresh_counter_ = 0;
};

struct Boundary {
  std::vector<std::string> free_in;   // sorted
  std::vector<std::string> free_out;  // sorted
  bool empty() const { return free_in.empty() && free_out.empty(); }
  friend bool operator==(const Boundary&, const Boundary&) = default;
};

Boundary boundary(const Molecule& m, const KindTable& kinds);

enum class ViolationKind {
  unknown_kind,
  arity_mismatch,
  same_direction,
  overused_edge,
  duplicate_node_id,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const Molecule& m, const KindTable& kinds);

/// Caps every dangling in-slot edge with FRIN and every dangling out-slot
/// edge with FROUT.
Molecule close_boundary(const Molecule& m, const KindTable& kinds);

/// Node count per kind name.
std::map<std::string, std::size_t> kind_counts(const Molecule& m);

/// Splits into connected components; node order inside each is preserved.
std::vector<Molecule> connected_components(const Molecule& m);

}  // namespace chemlambda
