#include "chemlambda/iso.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

namespace chemlambda {

namespace {

constexpr std::size_t kFree = static_cast<std::size_t>(-1);

struct Port {
  std::size_t node = kFree;  // kFree when dangling
  std::size_t slot = 0;
  EdgeId edge = 0;
};

struct View {
  const Molecule& m;
  std::vector<std::vector<Port>> ports;
};

View build_view(const Molecule& m) {
  View v{m, {}};
  const auto& nodes = m.nodes();
  v.ports.resize(nodes.size());
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> occ(m.edge_capacity());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    v.ports[i].resize(nodes[i].ports.size());
    for (std::size_t s = 0; s < nodes[i].ports.size(); ++s) occ[nodes[i].ports[s]].push_back({i, s});
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t s = 0; s < nodes[i].ports.size(); ++s) {
      EdgeId e = nodes[i].ports[s];
      Port p;
      p.edge = e;
      for (auto [j, t] : occ[e]) {
        if (j != i || t != s) p = Port{j, t, e};
      }
      if (occ[e].size() > 2) throw std::invalid_argument("iso: edge " + m.edge_name(e) + " used more than twice");
      v.ports[i][s] = p;
    }
  }
  return v;
}

template <class Key>
std::vector<std::size_t> rank(const std::vector<Key>& keys) {
  std::vector<Key> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> out(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    out[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin());
  }
  return out;
}

std::vector<std::size_t> refine_colours(const View& v, BoundaryNames names) {
  const auto& nodes = v.m.nodes();
  std::vector<std::string> initial(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::string key = nodes[i].kind;
    for (const auto& p : v.ports[i]) {
      key += p.node == kFree ? "|F" : "|B";
      if (p.node == kFree && names == BoundaryNames::fixed) key += v.m.edge_name(p.edge);
    }
    initial[i] = std::move(key);
  }
  auto colour = rank(initial);
  std::size_t classes = colour.empty() ? 0 : *std::max_element(colour.begin(), colour.end()) + 1;
  for (;;) {
    std::vector<std::vector<std::size_t>> sig(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      sig[i].push_back(colour[i]);
      for (const auto& p : v.ports[i]) {
        sig[i].push_back(p.node == kFree ? kFree : colour[p.node]);
        sig[i].push_back(p.node == kFree ? kFree : p.slot);
      }
    }
    auto next = rank(sig);
    std::size_t next_classes = next.empty() ? 0 : *std::max_element(next.begin(), next.end()) + 1;
    colour = std::move(next);
    if (next_classes == classes) break;
    classes = next_classes;
  }
  return colour;
}

std::string component_code(const View& v, std::size_t start, BoundaryNames names, std::vector<std::size_t>& label,
                           std::vector<std::size_t>& order) {
  order.clear();
  label[start] = 0;
  order.push_back(start);
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (const auto& p : v.ports[order[k]]) {
      if (p.node != kFree && label[p.node] == kFree) {
        label[p.node] = order.size();
        order.push_back(p.node);
      }
    }
  }
  std::string code;
  for (auto i : order) {
    code += v.m.nodes()[i].kind;
    code += '(';
    for (const auto& p : v.ports[i]) {
      if (p.node == kFree) {
        code += 'F';
        if (names == BoundaryNames::fixed) {
          code += ':';
          code += v.m.edge_name(p.edge);
        }
      } else {
        code += std::to_string(label[p.node]);
        code += '.';
        code += std::to_string(p.slot);
      }
      code += ',';
    }
    code += ')';
  }
  for (auto i : order) label[i] = kFree;
  return code;
}

}  // namespace

std::optional<std::string> canonical_code(const Molecule& m, const IsoOptions& options) {
  if (m.size() > options.max_nodes) return std::nullopt;
  auto v = build_view(m);
  auto colour = refine_colours(v, options.boundary);

  const auto n = m.size();
  std::vector<std::size_t> comp(n, kFree);
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    if (comp[i] != kFree) continue;
    members.emplace_back();
    std::vector<std::size_t> stack{i};
    comp[i] = members.size() - 1;
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      members.back().push_back(x);
      for (const auto& p : v.ports[x]) {
        if (p.node != kFree && comp[p.node] == kFree) {
          comp[p.node] = comp[i];
          stack.push_back(p.node);
        }
      }
    }
  }

  std::vector<std::size_t> label(n, kFree);
  std::vector<std::size_t> order;
  std::vector<std::string> codes;
  for (const auto& mem : members) {
    std::size_t least = kFree;
    for (auto x : mem) least = std::min(least, colour[x]);
    std::string best;
    bool have = false;
    for (auto x : mem) {
      if (colour[x] != least) continue;
      auto c = component_code(v, x, options.boundary, label, order);
      if (!have || c < best) {
        best = std::move(c);
        have = true;
      }
    }
    codes.push_back(std::move(best));
  }
  std::sort(codes.begin(), codes.end());
  std::string out;
  for (const auto& c : codes) {
    out += c;
    out += '\n';
  }
  return out;
}

IsoOutcome iso_check(const Molecule& a, const Molecule& b, const IsoOptions& options) {
  if (a.size() > options.max_nodes || b.size() > options.max_nodes) return IsoOutcome::too_large;
  if (a.size() != b.size()) return IsoOutcome::not_isomorphic;
  if (kind_counts(a) != kind_counts(b)) return IsoOutcome::not_isomorphic;
  auto ca = canonical_code(a, options);
  auto cb = canonical_code(b, options);
  return *ca == *cb ? IsoOutcome::isomorphic : IsoOutcome::not_isomorphic;
}

bool isomorphic(const Molecule& a, const Molecule& b, const IsoOptions& options) {
  switch (iso_check(a, b, options)) {
    case IsoOutcome::isomorphic:
      return true;
    case IsoOutcome::not_isomorphic:
      return false;
    case IsoOutcome::too_large:
      break;
  }
  throw std::length_error("iso_check: molecule exceeds size cap");
}

}  // namespace chemlambda
