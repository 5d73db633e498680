#include "chemlambda/lambda.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>
#include <variant>
#include <vector>

#include "chemlambda/engine.hpp"

namespace chemlambda::lambda {

struct Term::Node {
  struct Var {
    std::string name;
  };
  struct Abs {
    std::string binder;
    Term body;
  };
  struct App {
    Term fn;
    Term arg;
  };
  std::variant<Var, Abs, App> v;
  std::size_t size = 1;
};

Term Term::var(std::string name) { return Term(std::make_shared<const Node>(Node{Node::Var{std::move(name)}, 1})); }

Term Term::abs(std::string binder, Term body) {
  auto size = body.size() + 1;
  return Term(std::make_shared<const Node>(Node{Node::Abs{std::move(binder), std::move(body)}, size}));
}

Term Term::app(Term fn, Term arg) {
  auto size = fn.size() + arg.size() + 1;
  return Term(std::make_shared<const Node>(Node{Node::App{std::move(fn), std::move(arg)}, size}));
}

Term::Tag Term::tag() const { return static_cast<Tag>(node_->v.index()); }

const std::string& Term::name() const {
  if (const auto* v = std::get_if<Node::Var>(&node_->v)) return v->name;
  return std::get<Node::Abs>(node_->v).binder;
}

const Term& Term::body() const { return std::get<Node::Abs>(node_->v).body; }
const Term& Term::fn() const { return std::get<Node::App>(node_->v).fn; }
const Term& Term::arg() const { return std::get<Node::App>(node_->v).arg; }
std::size_t Term::size() const { return node_->size; }

std::string to_string(const Term& t) {
  switch (t.tag()) {
    case Term::Tag::var:
      return t.name();
    case Term::Tag::abs:
      return "\\" + t.name() + "." + to_string(t.body());
    case Term::Tag::app: {
      std::string f = to_string(t.fn());
      if (t.fn().is_abs()) f = "(" + f + ")";
      std::string a = to_string(t.arg());
      if (!t.arg().is_var()) a = "(" + a + ")";
      return f + " " + a;
    }
  }
  return {};
}

namespace {

bool ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '\'';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Term parse() {
    auto t = term();
    skip();
    if (i_ < s_.size()) throw LambdaParseError(i_, std::string("unexpected '") + s_[i_] + "'");
    return t;
  }

 private:
  void skip() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) ++i_;
  }

  bool at_lambda() {
    skip();
    if (i_ < s_.size() && s_[i_] == '\\') return true;
    return s_.substr(i_, 2) == "\xCE\xBB";
  }

  void eat_lambda() { i_ += s_[i_] == '\\' ? 1 : 2; }

  std::string ident() {
    skip();
    auto start = i_;
    while (i_ < s_.size() && ident_char(s_[i_])) ++i_;
    return std::string(s_.substr(start, i_ - start));
  }

  Term term() { return at_lambda() ? abstraction() : application(); }

  Term abstraction() {
    eat_lambda();
    std::vector<std::string> binders;
    for (;;) {
      skip();
      if (i_ < s_.size() && s_[i_] == '.') break;
      auto pos = i_;
      auto name = ident();
      if (name.empty()) {
        if (i_ >= s_.size()) throw LambdaParseError(pos, "expected '.' after binder");
        throw LambdaParseError(pos, std::string("unexpected '") + s_[i_] + "' in binder list");
      }
      binders.push_back(std::move(name));
    }
    if (binders.empty()) throw LambdaParseError(i_, "empty binder");
    ++i_;  // '.'
    skip();
    if (i_ >= s_.size()) throw LambdaParseError(i_, "missing abstraction body");
    auto body = term();
    for (auto it = binders.rbegin(); it != binders.rend(); ++it) body = Term::abs(*it, body);
    return body;
  }

  Term application() {
    std::optional<Term> acc;
    for (;;) {
      if (at_lambda()) {
        auto a = abstraction();
        acc = acc ? Term::app(*acc, a) : a;
        break;
      }
      skip();
      if (i_ >= s_.size()) break;
      std::optional<Term> atom;
      if (s_[i_] == '(') {
        auto open = i_++;
        auto inner = term();
        skip();
        if (i_ >= s_.size() || s_[i_] != ')') throw LambdaParseError(open, "unbalanced parentheses");
        ++i_;
        atom = inner;
      } else if (ident_char(s_[i_])) {
        atom = Term::var(ident());
      } else {
        break;
      }
      acc = acc ? Term::app(*acc, *atom) : *atom;
    }
    if (!acc) {
      if (i_ >= s_.size()) throw LambdaParseError(i_, "expected a term");
      throw LambdaParseError(i_, std::string("unexpected '") + s_[i_] + "'");
    }
    return *acc;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

void collect_free(const Term& t, std::vector<std::string>& bound, std::set<std::string>& out) {
  switch (t.tag()) {
    case Term::Tag::var:
      if (std::find(bound.begin(), bound.end(), t.name()) == bound.end()) out.insert(t.name());
      return;
    case Term::Tag::abs:
      bound.push_back(t.name());
      collect_free(t.body(), bound, out);
      bound.pop_back();
      return;
    case Term::Tag::app:
      collect_free(t.fn(), bound, out);
      collect_free(t.arg(), bound, out);
      return;
  }
}

bool alpha_eq(const Term& a, const Term& b, std::vector<std::string>& ea, std::vector<std::string>& eb) {
  if (a.tag() != b.tag()) return false;
  switch (a.tag()) {
    case Term::Tag::var: {
      auto ia = std::find(ea.rbegin(), ea.rend(), a.name());
      auto ib = std::find(eb.rbegin(), eb.rend(), b.name());
      const bool fa = ia == ea.rend();
      const bool fb = ib == eb.rend();
      if (fa || fb) return fa && fb && a.name() == b.name();
      return (ia - ea.rbegin()) == (ib - eb.rbegin());
    }
    case Term::Tag::abs: {
      ea.push_back(a.name());
      eb.push_back(b.name());
      bool r = alpha_eq(a.body(), b.body(), ea, eb);
      ea.pop_back();
      eb.pop_back();
      return r;
    }
    case Term::Tag::app:
      return alpha_eq(a.fn(), b.fn(), ea, eb) && alpha_eq(a.arg(), b.arg(), ea, eb);
  }
  return false;
}

Term substitute(const Term& t, const std::string& x, const Term& s, const std::set<std::string>& fv_s) {
  switch (t.tag()) {
    case Term::Tag::var:
      return t.name() == x ? s : t;
    case Term::Tag::app:
      return Term::app(substitute(t.fn(), x, s, fv_s), substitute(t.arg(), x, s, fv_s));
    case Term::Tag::abs: {
      if (t.name() == x) return t;
      auto fv_body = free_variables(t.body());
      if (!fv_body.contains(x)) return t;
      if (!fv_s.contains(t.name())) return Term::abs(t.name(), substitute(t.body(), x, s, fv_s));
      std::string y = t.name();
      while (fv_s.contains(y) || fv_body.contains(y) || y == x) y += '\'';
      auto renamed = substitute(t.body(), t.name(), Term::var(y), {y});
      return Term::abs(y, substitute(renamed, x, s, fv_s));
    }
  }
  return t;
}

std::optional<Term> step(const Term& t) {
  switch (t.tag()) {
    case Term::Tag::var:
      return std::nullopt;
    case Term::Tag::abs:
      if (auto b = step(t.body())) return Term::abs(t.name(), *b);
      return std::nullopt;
    case Term::Tag::app:
      if (t.fn().is_abs()) return substitute(t.fn().body(), t.fn().name(), t.arg(), free_variables(t.arg()));
      if (auto f = step(t.fn())) return Term::app(*f, t.arg());
      if (auto a = step(t.arg())) return Term::app(t.fn(), *a);
      return std::nullopt;
  }
  return std::nullopt;
}

Term expand(const Term& t, std::vector<std::string>& bound) {
  switch (t.tag()) {
    case Term::Tag::var: {
      if (std::find(bound.begin(), bound.end(), t.name()) != bound.end()) return t;
      const auto& lib = combinators();
      if (auto it = lib.find(t.name()); it != lib.end()) return it->second;
      return t;
    }
    case Term::Tag::abs: {
      bound.push_back(t.name());
      auto b = expand(t.body(), bound);
      bound.pop_back();
      return Term::abs(t.name(), b);
    }
    case Term::Tag::app:
      return Term::app(expand(t.fn(), bound), expand(t.arg(), bound));
  }
  return t;
}

// FO chain shared by the translation and by sharing_normal_form:
//   FO in o1 r1, FO r1 o2 r2, ..., FO r(k-2) o(k-1) ok
void fanout_chain(Molecule& m, EdgeId input, const std::vector<EdgeId>& outputs, const std::function<EdgeId()>& fresh) {
  EdgeId cur = input;
  for (std::size_t i = 0; i + 1 < outputs.size(); ++i) {
    if (i + 2 == outputs.size()) {
      m.add_node("FO", std::vector<EdgeId>{cur, outputs[i], outputs[i + 1]});
    } else {
      EdgeId rest = fresh();
      m.add_node("FO", std::vector<EdgeId>{cur, outputs[i], rest});
      cur = rest;
    }
  }
}

class Translator {
 public:
  Molecule build(const Term& t) {
    std::vector<std::pair<std::string, std::size_t>> env;
    count(t, env);
    std::size_t abs_index = 0;
    EdgeId root = emit(t, env, abs_index);
    if (t.is_var()) {
      // A bare variable has no node of its own; keep the root distinct from
      // the free input.
      EdgeId out = fresh();
      m_.add_node("Arrow", std::vector<EdgeId>{root, out});
    }
    return std::move(m_);
  }

 private:
  static constexpr std::size_t kFreeBit = std::size_t{1} << 62;

  std::size_t resolve(const std::string& name, const std::vector<std::pair<std::string, std::size_t>>& env) {
    for (auto it = env.rbegin(); it != env.rend(); ++it) {
      if (it->first == name) return it->second;
    }
    auto [it, inserted] = free_ids_.emplace(name, kFreeBit | free_ids_.size());
    if (inserted) uses_[it->second] = 0;
    return it->second;
  }

  void count(const Term& t, std::vector<std::pair<std::string, std::size_t>>& env) {
    switch (t.tag()) {
      case Term::Tag::var:
        ++uses_[resolve(t.name(), env)];
        return;
      case Term::Tag::abs: {
        auto id = binders_++;
        uses_[id] = 0;
        env.emplace_back(t.name(), id);
        count(t.body(), env);
        env.pop_back();
        return;
      }
      case Term::Tag::app:
        count(t.fn(), env);
        count(t.arg(), env);
        return;
    }
  }

  EdgeId fresh() { return m_.edge("e" + std::to_string(next_edge_++)); }

  void share(std::size_t binder, EdgeId source) {
    const auto k = uses_[binder];
    auto& occ = occ_[binder];
    if (k == 0) {
      m_.add_node("T", std::vector<EdgeId>{source});
    } else if (k == 1) {
      occ.push_back(source);
    } else {
      for (std::size_t i = 0; i < k; ++i) occ.push_back(fresh());
      fanout_chain(m_, source, occ, [this] { return fresh(); });
    }
    next_occ_[binder] = 0;
  }

  EdgeId emit(const Term& t, std::vector<std::pair<std::string, std::size_t>>& env, std::size_t& abs_index) {
    switch (t.tag()) {
      case Term::Tag::var: {
        auto id = resolve(t.name(), env);
        if ((id & kFreeBit) != 0 && !occ_.contains(id)) share(id, fresh());
        return occ_[id][next_occ_[id]++];
      }
      case Term::Tag::abs: {
        auto id = abs_index++;
        EdgeId var = fresh();
        share(id, var);
        env.emplace_back(t.name(), id);
        EdgeId body = emit(t.body(), env, abs_index);
        env.pop_back();
        EdgeId out = fresh();
        m_.add_node("L", std::vector<EdgeId>{body, var, out});
        return out;
      }
      case Term::Tag::app: {
        EdgeId f = emit(t.fn(), env, abs_index);
        EdgeId a = emit(t.arg(), env, abs_index);
        EdgeId out = fresh();
        m_.add_node("A", std::vector<EdgeId>{f, a, out});
        return out;
      }
    }
    return 0;
  }

  Molecule m_;
  std::size_t next_edge_ = 0;
  std::size_t binders_ = 0;
  std::unordered_map<std::size_t, std::size_t> uses_;
  std::unordered_map<std::string, std::size_t> free_ids_;
  std::unordered_map<std::size_t, std::vector<EdgeId>> occ_;
  std::unordered_map<std::size_t, std::size_t> next_occ_;
};

bool is_fan(const std::string& kind) { return kind == "FO" || kind == "FOE"; }

}  // namespace

Term parse_lambda(std::string_view text) { return Parser(text).parse(); }

std::set<std::string> free_variables(const Term& t) {
  std::set<std::string> out;
  std::vector<std::string> bound;
  collect_free(t, bound, out);
  return out;
}

bool alpha_equivalent(const Term& a, const Term& b) {
  std::vector<std::string> ea;
  std::vector<std::string> eb;
  return alpha_eq(a, b, ea, eb);
}

bool is_normal_form(const Term& t) {
  switch (t.tag()) {
    case Term::Tag::var:
      return true;
    case Term::Tag::abs:
      return is_normal_form(t.body());
    case Term::Tag::app:
      return !t.fn().is_abs() && is_normal_form(t.fn()) && is_normal_form(t.arg());
  }
  return true;
}

NormalOrderOutcome normal_order_reduce(const Term& t, std::size_t fuel) {
  NormalOrderOutcome out;
  Term cur = t;
  for (;;) {
    auto next = step(cur);
    if (!next) {
      out.normal_form = cur;
      return out;
    }
    if (out.steps == fuel) return out;
    ++out.steps;
    cur = *next;
  }
}

Term church(unsigned n) {
  Term body = Term::var("x");
  for (unsigned i = 0; i < n; ++i) body = Term::app(Term::var("f"), body);
  return Term::abs("f", Term::abs("x", body));
}

const std::map<std::string, Term>& combinators() {
  static const std::map<std::string, Term> lib = [] {
    std::map<std::string, Term> m;
    m.emplace("I", parse_lambda("\\x.x"));
    m.emplace("K", parse_lambda("\\x.\\y.x"));
    m.emplace("S", parse_lambda("\\x.\\y.\\z.x z (y z)"));
    m.emplace("B", parse_lambda("\\x.\\y.\\z.x (y z)"));
    m.emplace("C", parse_lambda("\\x.\\y.\\z.x z y"));
    m.emplace("W", parse_lambda("\\x.\\y.x y y"));
    m.emplace("Omega", parse_lambda("(\\x.x x) (\\x.x x)"));
    m.emplace("succ", parse_lambda("\\n.\\f.\\x.f (n f x)"));
    m.emplace("pred", parse_lambda("\\n.\\f.\\x.n (\\g.\\h.h (g f)) (\\u.x) (\\u.u)"));
    m.emplace("add", parse_lambda("\\m.\\n.\\f.\\x.m f (n f x)"));
    m.emplace("mul", parse_lambda("\\m.\\n.\\f.m (n f)"));
    for (unsigned i = 0; i <= 9; ++i) m.emplace(std::to_string(i), church(i));
    return m;
  }();
  return lib;
}

Term expand_library(const Term& t) {
  std::vector<std::string> bound;
  return expand(t, bound);
}

Molecule to_molecule(const Term& t) { return Translator().build(t); }

Molecule sharing_normal_form(const Molecule& input, const KindTable& kinds) {
  // Keep only components that reach a FROUT.
  const Molecule combed = comb_pass(input);
  Molecule m = combed.empty_copy();
  for (const auto& comp : connected_components(combed)) {
    const bool live = std::any_of(comp.nodes().begin(), comp.nodes().end(),
                                  [](const Node& n) { return n.kind == "FROUT"; });
    if (!live) continue;
    for (const auto& n : comp.nodes()) {
      std::vector<EdgeId> ports;
      for (auto e : n.ports) ports.push_back(m.edge(comp.edge_name(e)));
      m.add_node_with_id(n.id, n.kind, std::move(ports));
    }
  }

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  const auto& nodes = m.nodes();
  std::vector<std::pair<std::size_t, std::size_t>> producer(m.edge_capacity(), {kNone, 0});
  std::vector<std::size_t> consumer(m.edge_capacity(), kNone);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& k = kinds.at(nodes[i].kind);
    for (std::size_t s = 0; s < k.arity(); ++s) {
      if (k.slots[s].dir == Direction::out) {
        producer[nodes[i].ports[s]] = {i, s};
      } else {
        consumer[nodes[i].ports[s]] = i;
      }
    }
  }

  // Order in which a depth-first walk from the roots meets fan outputs.
  std::vector<std::size_t> leaf_order(m.edge_capacity(), kNone);
  std::vector<char> seen(nodes.size(), 0);
  std::size_t counter = 0;
  std::function<void(EdgeId, bool)> visit = [&](EdgeId e, bool from_fan) {
    auto [p, slot] = producer[e];
    if (p == kNone) return;
    const auto& kind = nodes[p].kind;
    if (is_fan(kind)) {
      if (!from_fan && leaf_order[e] == kNone) leaf_order[e] = counter++;
      if (!seen[p]) {
        seen[p] = 1;
        visit(nodes[p].ports[0], true);
      }
      return;
    }
    if (kind == "L" && slot == 1) return;  // a binder, reached through its variable
    if (seen[p]) return;
    seen[p] = 1;
    const auto& k = kinds.at(kind);
    for (std::size_t s = 0; s < k.arity(); ++s) {
      if (k.slots[s].dir == Direction::in) visit(nodes[p].ports[s], false);
    }
  };
  for (const auto& n : nodes) {
    if (n.kind == "FROUT") visit(n.ports[0], false);
  }

  std::vector<char> drop(nodes.size(), 0);
  struct Tree {
    EdgeId input;
    std::vector<EdgeId> leaves;
  };
  std::vector<Tree> trees;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!is_fan(nodes[i].kind)) continue;
    auto src = producer[nodes[i].ports[0]].first;
    if (src != kNone && is_fan(nodes[src].kind)) continue;  // not a root
    Tree tree{nodes[i].ports[0], {}};
    std::vector<std::pair<std::size_t, EdgeId>> keyed;
    std::size_t walk = 0;
    std::function<void(std::size_t)> collect = [&](std::size_t f) {
      drop[f] = 1;
      for (std::size_t s = 1; s <= 2; ++s) {
        EdgeId out = nodes[f].ports[s];
        auto c = consumer[out];
        if (c != kNone && is_fan(nodes[c].kind) && !drop[c]) {
          collect(c);
        } else {
          auto key = leaf_order[out] != kNone ? leaf_order[out] : counter + walk;
          keyed.emplace_back(key, out);
          ++walk;
        }
      }
    };
    collect(i);
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [k, e] : keyed) tree.leaves.push_back(e);
    trees.push_back(std::move(tree));
  }

  Molecule out = m.empty_copy();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!drop[i]) out.add_node_with_id(nodes[i].id, nodes[i].kind, nodes[i].ports);
  }
  for (const auto& tree : trees) fanout_chain(out, tree.input, tree.leaves, [&out] { return out.fresh_edge(); });
  out.compact();
  return out;
}

}  // namespace chemlambda::lambda
