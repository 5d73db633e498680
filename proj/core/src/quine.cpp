#include "chemlambda/quine.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <stdexcept>

#include "chemlambda/engine.hpp"
#include "chemlambda/iso.hpp"

namespace chemlambda {

namespace {

struct PortRef {
  std::size_t node;
  std::size_t slot;
};

class Search {
 public:
  Search(const Chemistry& c, const QuineSearchOptions& o) : c_(c), o_(o) {
    if (o.kinds.empty()) {
      for (const auto& k : c.kinds().kinds()) {
        if (k.name != "Arrow") kinds_.push_back(&k);
      }
    } else {
      for (const auto& name : o.kinds) kinds_.push_back(&c.kinds().at(name));
    }
    std::sort(kinds_.begin(), kinds_.end(), [](auto* a, auto* b) { return a->name < b->name; });
    kinds_.erase(std::unique(kinds_.begin(), kinds_.end()), kinds_.end());
  }

  QuineSearchResult run() {
    for (std::size_t n = 1; n <= o_.max_nodes; ++n) {
      std::vector<std::size_t> pick;
      multisets(n, 0, pick);
    }
    std::sort(result_.quines.begin(), result_.quines.end(), [](const QuineFinding& a, const QuineFinding& b) {
      if (a.molecule.size() != b.molecule.size()) return a.molecule.size() < b.molecule.size();
      return a.canonical < b.canonical;
    });
    return std::move(result_);
  }

 private:
  void multisets(std::size_t left, std::size_t from, std::vector<std::size_t>& pick) {
    if (left == 0) {
      wire_all(pick);
      return;
    }
    for (std::size_t k = from; k < kinds_.size(); ++k) {
      pick.push_back(k);
      multisets(left - 1, k, pick);
      pick.pop_back();
    }
  }

  void wire_all(const std::vector<std::size_t>& pick) {
    nodes_.clear();
    outs_.clear();
    ins_.clear();
    for (std::size_t i = 0; i < pick.size(); ++i) {
      const auto* k = kinds_[pick[i]];
      nodes_.push_back(k);
      for (std::size_t s = 0; s < k->arity(); ++s) {
        (k->slots[s].dir == Direction::out ? outs_ : ins_).push_back(PortRef{i, s});
      }
    }
    if (outs_.size() != ins_.size() || outs_.empty()) return;
    pick_ = pick;
    target_.assign(outs_.size(), 0);
    in_used_.assign(ins_.size(), 0);
    touched_.assign(nodes_.size(), 0);
    assign(0);
  }

  // The first node of a run of identical kinds that is still untouched, or
  // the node itself when it is touched.
  bool may_touch(std::size_t node) const {
    if (touched_[node]) return true;
    return node == 0 || pick_[node - 1] != pick_[node] || touched_[node - 1];
  }

  void assign(std::size_t k) {
    if (k == outs_.size()) {
      check();
      return;
    }
    const auto src = outs_[k].node;
    if (!may_touch(src)) return;
    const char src_was = touched_[src];
    touched_[src] = 1;
    for (std::size_t j = 0; j < ins_.size(); ++j) {
      if (in_used_[j]) continue;
      const auto dst = ins_[j].node;
      if (!may_touch(dst)) continue;
      const char dst_was = touched_[dst];
      touched_[dst] = 1;
      in_used_[j] = 1;
      target_[k] = j;
      assign(k + 1);
      in_used_[j] = 0;
      touched_[dst] = dst_was;
    }
    touched_[src] = src_was;
  }

  bool connected() const {
    std::vector<std::size_t> parent(nodes_.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    std::size_t parts = nodes_.size();
    for (std::size_t k = 0; k < outs_.size(); ++k) {
      auto a = find(outs_[k].node);
      auto b = find(ins_[target_[k]].node);
      if (a != b) {
        parent[a] = b;
        --parts;
      }
    }
    return parts == 1;
  }

  void check() {
    if (!connected()) return;
    ++result_.wirings;
    Molecule m;
    std::vector<std::vector<EdgeId>> ports(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) ports[i].resize(nodes_[i]->arity());
    for (std::size_t k = 0; k < outs_.size(); ++k) {
      const EdgeId e = m.edge("e" + std::to_string(k));
      ports[outs_[k].node][outs_[k].slot] = e;
      ports[ins_[target_[k]].node][ins_[target_[k]].slot] = e;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) m.add_node(nodes_[i]->name, std::move(ports[i]));
    if (find_matches(m, c_).empty()) return;
    ++result_.simulated;

    const auto counts = kind_counts(m);
    std::optional<std::string> code;
    Rng rng(0);
    Molecule cur = m;
    for (std::size_t p = 1; p <= o_.horizon; ++p) {
      auto r = cycle(std::move(cur), c_, cfg_, rng, p);
      if (r.report.applied.empty()) return;
      cur = std::move(r.molecule);
      if (r.report.kind_counts != counts) continue;
      if (!code) code = canonical_code(m);
      if (canonical_code(cur) == code) {
        if (seen_.insert(*code).second) result_.quines.push_back(QuineFinding{m, p, *code});
        return;
      }
    }
  }

  const Chemistry& c_;
  const QuineSearchOptions& o_;
  ReductionConfig cfg_;
  std::vector<const NodeKind*> kinds_;
  std::vector<std::size_t> pick_;
  std::vector<const NodeKind*> nodes_;
  std::vector<PortRef> outs_;
  std::vector<PortRef> ins_;
  std::vector<std::size_t> target_;
  std::vector<char> in_used_;
  std::vector<char> touched_;
  std::set<std::string> seen_;
  QuineSearchResult result_;
};

}  // namespace

QuineSearchResult quine_search(const Chemistry& c, const QuineSearchOptions& options) {
  if (options.horizon == 0) throw std::invalid_argument("quine_search: horizon must be at least 1");
  return Search(c, options).run();
}

}  // namespace chemlambda
