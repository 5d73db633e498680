#include "chemlambda/chemistry.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>

#include "builtin_data.hpp"

namespace chemlambda {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    out.push_back(std::string(line));
    pos = end + 1;
  }
  return out;
}

RuleFamily parse_family(const std::string& s) {
  if (s == "BETA") return RuleFamily::beta;
  if (s == "FAN-IN") return RuleFamily::fan_in;
  if (s == "DIST") return RuleFamily::dist;
  if (s == "PRUNE") return RuleFamily::prune;
  if (s == "COMB") return RuleFamily::comb;
  if (s == "ANNIHILATE") return RuleFamily::annihilate;
  throw ChemistryError("unknown rule family " + s);
}

PortSlot parse_slot_decl(const std::string& tok) {
  auto slash = tok.find('/');
  if (slash == std::string::npos) throw ChemistryError("slot '" + tok + "' is not role/direction");
  auto role = tok.substr(0, slash);
  auto dir = tok.substr(slash + 1);
  PortSlot s;
  if (role == "left") {
    s.role = PortRole::left;
  } else if (role == "middle") {
    s.role = PortRole::middle;
  } else if (role == "right") {
    s.role = PortRole::right;
  } else {
    throw ChemistryError("unknown slot role '" + role + "'");
  }
  if (dir == "in") {
    s.dir = Direction::in;
  } else if (dir == "out") {
    s.dir = Direction::out;
  } else {
    throw ChemistryError("unknown slot direction '" + dir + "'");
  }
  return s;
}

std::pair<std::string, std::string> split_ref(const std::string& ref) {
  auto dot = ref.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size()) {
    throw ChemistryError("malformed port reference '" + ref + "'");
  }
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

std::size_t arity3_count(const std::vector<std::string>& kinds, const KindTable& table) {
  return static_cast<std::size_t>(
      std::count_if(kinds.begin(), kinds.end(), [&](const std::string& k) { return table.at(k).arity() == 3; }));
}

struct RuleParser {
  const KindTable& kinds;

  const NodeKind& kind(const std::string& name, const std::string& rule) const {
    const auto* k = kinds.find(name);
    if (k == nullptr) throw ChemistryError("rule " + rule + ": undeclared kind " + name);
    return *k;
  }

  std::size_t slot(const NodeKind& k, const std::string& code, const std::string& rule) const {
    auto s = k.slot_index(code);
    if (!s) throw ChemistryError("rule " + rule + ": kind " + k.name + " has no slot " + code);
    return *s;
  }

  void parse(const std::string& line, std::vector<RewriteRule>& rules, std::vector<CombRule>& comb) const {
    auto lhs_at = line.find("lhs:");
    if (lhs_at == std::string::npos) throw ChemistryError("rule line without lhs: '" + trim(line) + "'");
    auto head = split_ws(line.substr(0, lhs_at));
    if (head.size() != 2) throw ChemistryError("rule line needs NAME FAMILY before lhs: '" + trim(line) + "'");
    const auto& name = head[0];
    auto family = parse_family(head[1]);

    auto rhs_at = line.find("rhs:", lhs_at);
    auto lhs_text = line.substr(lhs_at + 4, rhs_at == std::string::npos ? std::string::npos : rhs_at - lhs_at - 4);
    auto lhs_toks = split_ws(lhs_text);
    if (lhs_toks.size() != 3 || lhs_toks[1] != "-") {
      throw ChemistryError("rule " + name + ": lhs must be 'KIND.slot - KIND.slot'");
    }

    if (family == RuleFamily::comb) {
      if (rhs_at != std::string::npos) throw ChemistryError("rule " + name + ": COMB rules take no rhs");
      const bool arrow_first = lhs_toks[2] == "*";
      const bool arrow_second = lhs_toks[0] == "*";
      if (arrow_first == arrow_second) throw ChemistryError("rule " + name + ": COMB lhs needs exactly one '*' side");
      auto [k, s] = split_ref(arrow_first ? lhs_toks[0] : lhs_toks[2]);
      if (k != "Arrow") throw ChemistryError("rule " + name + ": COMB lhs must name Arrow");
      const auto& arrow = kind("Arrow", name);
      auto idx = slot(arrow, s, name);
      const auto want = arrow_first ? Direction::out : Direction::in;
      if (arrow.slots[idx].dir != want) throw ChemistryError("rule " + name + ": COMB lhs direction mismatch");
      comb.push_back(CombRule{name, s});
      return;
    }
    if (rhs_at == std::string::npos) throw ChemistryError("rule " + name + ": missing rhs");

    RewriteRule rule;
    rule.name = name;
    rule.family = family;
    std::array<std::pair<std::string, std::string>, 2> ends{split_ref(lhs_toks[0]), split_ref(lhs_toks[2])};
    std::array<const NodeKind*, 2> lk{&kind(ends[0].first, name), &kind(ends[1].first, name)};
    std::array<std::size_t, 2> ls{slot(*lk[0], ends[0].second, name), slot(*lk[1], ends[1].second, name)};
    if (lk[0]->slots[ls[0]].dir == Direction::in && lk[1]->slots[ls[1]].dir == Direction::out) {
      std::swap(ends[0], ends[1]);
      std::swap(lk[0], lk[1]);
      std::swap(ls[0], ls[1]);
    }
    if (lk[0]->slots[ls[0]].dir != Direction::out || lk[1]->slots[ls[1]].dir != Direction::in) {
      throw ChemistryError("rule " + name + ": lhs must join an out slot to an in slot");
    }
    rule.lhs = {LhsEnd{lk[0]->name, ls[0]}, LhsEnd{lk[1]->name, ls[1]}};
    const bool same_kind = lk[0]->name == lk[1]->name;

    // Boundary ports of the lhs and how often the rhs references each.
    std::map<std::pair<std::size_t, std::size_t>, int> boundary_uses;
    for (std::size_t side = 0; side < 2; ++side) {
      for (std::size_t s = 0; s < lk[side]->arity(); ++s) {
        if (s != ls[side]) boundary_uses[{side, s}] = 0;
      }
    }
    struct FreshUse {
      int in = 0;
      int out = 0;
    };
    std::map<std::size_t, FreshUse> fresh_uses;
    std::map<std::size_t, std::size_t> fresh_index;

    std::string rhs_text = line.substr(rhs_at + 4);
    std::stringstream parts(rhs_text);
    std::string part;
    while (std::getline(parts, part, ';')) {
      auto t = trim(part);
      if (t.empty()) continue;
      auto open = t.find('[');
      if (open == std::string::npos || t.back() != ']') {
        throw ChemistryError("rule " + name + ": malformed rhs node '" + t + "'");
      }
      TemplateNode node;
      node.kind = trim(t.substr(0, open));
      const auto& nk = kind(node.kind, name);
      std::stringstream ports(t.substr(open + 1, t.size() - open - 2));
      std::string p;
      std::vector<std::string> refs;
      while (std::getline(ports, p, ',')) refs.push_back(trim(p));
      if (refs.size() != nk.arity()) {
        throw ChemistryError("rule " + name + ": rhs " + node.kind + " needs " + std::to_string(nk.arity()) +
                             " ports, got " + std::to_string(refs.size()));
      }
      for (std::size_t s = 0; s < refs.size(); ++s) {
        const auto& ref = refs[s];
        const auto dir = nk.slots[s].dir;
        TemplatePort tp;
        if (!ref.empty() && ref[0] == '~') {
          std::size_t n = 0;
          try {
            n = std::stoul(ref.substr(1));
          } catch (const std::exception&) {
            throw ChemistryError("rule " + name + ": bad fresh edge '" + ref + "'");
          }
          tp.source = TemplatePort::Source::fresh;
          if (!fresh_index.contains(n)) fresh_index[n] = fresh_index.size();
          tp.fresh = fresh_index[n];
          (dir == Direction::in ? fresh_uses[n].in : fresh_uses[n].out)++;
        } else {
          auto [rk, rs] = split_ref(ref);
          if (same_kind) throw ChemistryError("rule " + name + ": ambiguous port reference " + ref);
          std::size_t side = 0;
          if (rk == lk[0]->name) {
            side = 0;
          } else if (rk == lk[1]->name) {
            side = 1;
          } else {
            throw ChemistryError("rule " + name + ": rhs references " + rk + ", which is not in the lhs");
          }
          auto sidx = slot(*lk[side], rs, name);
          if (sidx == ls[side]) throw ChemistryError("rule " + name + ": rhs references the shared lhs port " + ref);
          if (lk[side]->slots[sidx].dir != dir) {
            throw ChemistryError("rule " + name + ": " + ref + " lands in a slot of the wrong direction");
          }
          tp.side = side;
          tp.slot = sidx;
          ++boundary_uses[{side, sidx}];
        }
        node.ports.push_back(tp);
      }
      rule.rhs.push_back(std::move(node));
    }

    for (const auto& [port, uses] : boundary_uses) {
      const auto ref = lk[port.first]->name + "." + lk[port.first]->slots[port.second].code();
      if (uses == 0) throw ChemistryError("rule " + name + ": boundary port dropped: " + ref);
      if (uses > 1) throw ChemistryError("rule " + name + ": boundary port duplicated: " + ref);
    }
    for (const auto& [n, u] : fresh_uses) {
      if (u.in != 1 || u.out != 1) {
        throw ChemistryError("rule " + name + ": fresh edge ~" + std::to_string(n) +
                             " must join exactly one out slot to one in slot");
      }
    }
    rule.fresh_edges = fresh_index.size();

    std::vector<std::string> rhs_kinds;
    for (const auto& n : rule.rhs) rhs_kinds.push_back(n.kind);
    const bool only_arrows =
        std::all_of(rhs_kinds.begin(), rhs_kinds.end(), [](const std::string& k) { return k == "Arrow"; });
    switch (family) {
      case RuleFamily::beta:
      case RuleFamily::fan_in:
      case RuleFamily::annihilate:
        if (!only_arrows) throw ChemistryError("rule " + name + ": " + head[1] + " rhs must contain only Arrow nodes");
        break;
      case RuleFamily::dist:
        if (rule.rhs.size() != 4) throw ChemistryError("rule " + name + ": DIST rhs must have 4 nodes");
        break;
      case RuleFamily::prune: {
        std::vector<std::string> lhs_kinds{lk[0]->name, lk[1]->name};
        if (arity3_count(rhs_kinds, kinds) >= arity3_count(lhs_kinds, kinds)) {
          throw ChemistryError("rule " + name + ": PRUNE rhs must remove a 3-valent node");
        }
        break;
      }
      case RuleFamily::comb:
        break;
    }
    rules.push_back(std::move(rule));
  }
};

}  // namespace

std::string_view to_string(RuleFamily f) {
  switch (f) {
    case RuleFamily::beta:
      return "BETA";
    case RuleFamily::fan_in:
      return "FAN-IN";
    case RuleFamily::dist:
      return "DIST";
    case RuleFamily::prune:
      return "PRUNE";
    case RuleFamily::comb:
      return "COMB";
    case RuleFamily::annihilate:
      return "ANNIHILATE";
  }
  return "?";
}

Chemistry::Chemistry(std::string name, KindTable kinds, std::vector<RewriteRule> rules, std::vector<CombRule> comb)
    : name_(std::move(name)), kinds_(std::move(kinds)), rules_(std::move(rules)), comb_(std::move(comb)) {
  std::set<std::string> names;
  const auto k = kinds_.kinds().size();
  by_lhs_.assign(k * 3 * k * 3, -1);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& r = rules_[i];
    if (!names.insert(r.name).second) throw ChemistryError("duplicate rule name " + r.name);
    auto a = kind_index(r.lhs[0].kind);
    auto b = kind_index(r.lhs[1].kind);
    if (!a || !b) throw ChemistryError("rule " + r.name + ": undeclared kind");
    auto& slot = by_lhs_[((*a * 3 + r.lhs[0].slot) * k + *b) * 3 + r.lhs[1].slot];
    if (slot >= 0) throw ChemistryError("rule " + r.name + ": duplicate lhs");
    slot = static_cast<int>(i);
  }
  for (const auto& c : comb_) {
    if (!names.insert(c.name).second) throw ChemistryError("duplicate rule name " + c.name);
  }
}

const RewriteRule* Chemistry::find_rule(std::string_view name) const {
  for (const auto& r : rules_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const RewriteRule* Chemistry::rule_for(std::string_view out_kind, std::size_t out_slot, std::string_view in_kind,
                                       std::size_t in_slot) const {
  auto a = kind_index(out_kind);
  auto b = kind_index(in_kind);
  if (!a || !b || out_slot >= 3 || in_slot >= 3) return nullptr;
  return rule_at(*a, out_slot, *b, in_slot);
}

std::optional<std::size_t> Chemistry::kind_index(std::string_view kind) const {
  const auto& ks = kinds_.kinds();
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i].name == kind) return i;
  }
  return std::nullopt;
}

const RewriteRule* Chemistry::rule_at(std::size_t out_kind, std::size_t out_slot, std::size_t in_kind,
                                      std::size_t in_slot) const {
  const auto k = kinds_.kinds().size();
  const int r = by_lhs_[((out_kind * 3 + out_slot) * k + in_kind) * 3 + in_slot];
  return r < 0 ? nullptr : &rules_[static_cast<std::size_t>(r)];
}

double Chemistry::default_weight(std::string_view) const { return 1.0; }

Chemistry load_chemistry(std::string_view definition) {
  enum class Section { none, kinds, rules } section = Section::none;
  std::string name;
  std::vector<NodeKind> kinds;
  std::vector<std::string> rule_lines;
  std::size_t line_no = 0;
  for (const auto& raw : lines_of(definition)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    if (line == "kinds:") {
      section = Section::kinds;
      continue;
    }
    if (line == "rules:") {
      section = Section::rules;
      continue;
    }
    auto toks = split_ws(line);
    if (section == Section::none) {
      if (toks.size() == 2 && toks[0] == "chemistry") {
        name = toks[1];
        continue;
      }
      throw ChemistryError("line " + std::to_string(line_no) + ": expected 'chemistry NAME', 'kinds:' or 'rules:'");
    }
    if (section == Section::kinds) {
      NodeKind k;
      k.name = toks[0];
      try {
        for (std::size_t i = 1; i < toks.size(); ++i) k.slots.push_back(parse_slot_decl(toks[i]));
      } catch (const ChemistryError& e) {
        throw ChemistryError("line " + std::to_string(line_no) + ": " + e.what());
      }
      kinds.push_back(std::move(k));
    } else {
      rule_lines.push_back(line);
    }
  }
  if (name.empty()) throw ChemistryError("definition lacks a 'chemistry NAME' line");

  KindTable table;
  try {
    table = KindTable(std::move(kinds));
  } catch (const KindError& e) {
    throw ChemistryError(e.what());
  }
  std::vector<RewriteRule> rules;
  std::vector<CombRule> comb;
  RuleParser parser{table};
  for (const auto& l : rule_lines) parser.parse(l, rules, comb);
  return Chemistry(std::move(name), std::move(table), std::move(rules), std::move(comb));
}

std::vector<std::string> builtin_chemistry_names() {
  std::vector<std::string> out;
  for (const auto& f : detail::builtin_files()) {
    if (f.name.ends_with(".chem")) out.emplace_back(f.name.substr(0, f.name.size() - 5));
  }
  return out;
}

std::string_view builtin_chemistry_source(std::string_view name) {
  for (const auto& f : detail::builtin_files()) {
    if (f.name.ends_with(".chem") && f.name.substr(0, f.name.size() - 5) == name) return f.text;
  }
  throw ChemistryError("no built-in chemistry named " + std::string(name));
}

const Chemistry& builtin_chemistry(std::string_view name) {
  static std::mutex mu;
  static std::map<std::string, Chemistry, std::less<>> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(name); it != cache.end()) return it->second;
  auto c = load_chemistry(builtin_chemistry_source(name));
  return cache.emplace(std::string(name), std::move(c)).first->second;
}

std::map<std::string, std::set<std::string>> active_ports(const Chemistry& c) {
  std::map<std::string, std::set<std::string>> table;
  for (const auto& k : c.kinds().kinds()) table[k.name];
  for (const auto& r : c.rules()) {
    for (const auto& end : r.lhs) table[end.kind].insert(c.kinds().at(end.kind).slots[end.slot].code());
  }
  return table;
}

KindTranslation load_translation(std::string_view text, const KindTable& from, const KindTable& to) {
  KindTranslation t;
  std::size_t line_no = 0;
  for (const auto& raw : lines_of(text)) {
    ++line_no;
    auto toks = split_ws(raw);
    if (toks.empty()) continue;
    if (toks.size() != 2) throw ChemistryError("translation line " + std::to_string(line_no) + ": expected 'SOURCE TARGET'");
    const auto* src = from.find(toks[0]);
    const auto* dst = to.find(toks[1]);
    if (src == nullptr) throw ChemistryError("translation: unknown source kind " + toks[0]);
    if (dst == nullptr) throw ChemistryError("translation: unknown target kind " + toks[1]);
    if (src->slots != dst->slots) {
      throw ChemistryError("translation: " + toks[0] + " and " + toks[1] + " have different slot signatures");
    }
    if (!t.mapping.emplace(toks[0], toks[1]).second) throw ChemistryError("translation: " + toks[0] + " mapped twice");
  }
  for (const auto& k : from.kinds()) {
    if (!t.mapping.contains(k.name)) throw ChemistryError("translation: kind " + k.name + " is not mapped");
  }
  return t;
}

const KindTranslation& builtin_translation(std::string_view from, std::string_view to) {
  static std::mutex mu;
  static std::map<std::string, KindTranslation, std::less<>> cache;
  std::string key = std::string(from) + "-" + std::string(to);
  std::lock_guard lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  for (const auto& f : detail::builtin_files()) {
    if (f.name == key + ".map") {
      auto t = load_translation(f.text, builtin_chemistry(from).kinds(), builtin_chemistry(to).kinds());
      return cache.emplace(key, std::move(t)).first->second;
    }
  }
  throw ChemistryError("no built-in translation from " + std::string(from) + " to " + std::string(to));
}

Molecule translate(const Molecule& m, const KindTranslation& t) {
  Molecule out = m;
  for (auto& n : out.nodes()) {
    auto it = t.mapping.find(n.kind);
    if (it == t.mapping.end()) throw ChemistryError("translate: kind " + n.kind + " is not mapped");
    n.kind = it->second;
  }
  return out;
}

}  // namespace chemlambda
