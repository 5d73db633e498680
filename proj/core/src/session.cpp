#include "chemlambda/session.hpp"

#include <nlohmann/json.hpp>

#include "chemlambda/lambda.hpp"
#include "chemlambda/mol_format.hpp"

namespace chemlambda {

using json = nlohmann::ordered_json;

namespace {

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json counts_json(const std::map<std::string, std::size_t>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

std::map<std::string, double> weights_from(const json& j, const Chemistry& c) {
  if (!j.is_object()) throw CommandError("weights must be an object of rule -> number");
  std::map<std::string, double> out;
  for (const auto& [rule, w] : j.items()) {
    if (c.find_rule(rule) == nullptr) throw CommandError("unknown rule " + rule);
    if (!w.is_number()) throw CommandError("weight for " + rule + " is not a number");
    const double v = w.get<double>();
    if (!(v >= 0.0)) throw CommandError("weight for " + rule + " is negative");
    out[rule] = v;
  }
  return out;
}

Strategy strategy_from(const json& j) {
  if (!j.is_string()) throw CommandError("strategy must be a string");
  auto s = parse_strategy(j.get<std::string>());
  if (!s) throw CommandError("unknown strategy " + j.get<std::string>());
  return *s;
}

std::uint64_t seed_from(const json& j) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    throw CommandError("seed must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

// Applies a recorded steering command to a configuration; false when the
// command does not change the reduction.
bool apply_steering(const json& cmd, ReductionConfig& cfg, Rng& rng, const Chemistry& c) {
  const auto type = cmd.value("type", std::string());
  const json payload = cmd.value("payload", json::object());
  if (type == "set-weights") {
    for (const auto& [k, v] : weights_from(payload.at("weights"), c)) cfg.weights[k] = v;
  } else if (type == "set-policy") {
    cfg.strategy = strategy_from(payload.at("strategy"));
  } else if (type == "reseed") {
    cfg.seed = seed_from(payload.at("seed"));
    rng = Rng(cfg.seed);
  } else {
    return false;
  }
  return true;
}

}  // namespace

struct Session::State {
  std::shared_ptr<const Chemistry> owned;
  const Chemistry* chem = nullptr;
  Trace trace;
  ReductionConfig cfg;
  Rng rng;
  Molecule cur;
  Boundary bound;
  std::map<std::string, std::size_t> totals;
  std::optional<TerminalStatus> status;
  bool stalled = false;
};

Session::Session(std::string id, Sink sink) : id_(std::move(id)), sink_(std::move(sink)) {}

std::size_t Session::cycle_index() const { return state_ ? state_->trace.cycles.size() : 0; }

void Session::emit(const std::string& event) const {
  if (sink_) sink_(event);
}

namespace {

std::string state_name(bool loaded, bool running, const std::optional<TerminalStatus>& status, bool stalled) {
  if (!loaded) return "empty";
  if (status) return std::string(to_string(*status));
  if (stalled) return "stalled";
  return running ? "running" : "paused";
}

}  // namespace

std::string Session::snapshot() const {
  json j;
  j["type"] = "snapshot";
  j["session"] = id_;
  j["cycle"] = cycle_index();
  if (!state_) {
    j["state"] = state_name(false, false, std::nullopt, false);
    j["nodes"] = json::array();
    j["mol"] = "";
    return j.dump();
  }
  const auto& s = *state_;
  j["state"] = state_name(true, running_, s.status, s.stalled);
  j["chemistry"] = s.chem->name();
  j["strategy"] = to_string(s.cfg.strategy);
  j["seed"] = s.cfg.seed;
  json w = json::object();
  for (const auto& r : s.chem->rules()) w[r.name] = s.cfg.weight(*s.chem, r.name);
  j["weights"] = w;
  json nodes = json::array();
  for (const auto& n : s.cur.nodes()) {
    json ports = json::array();
    for (auto e : n.ports) ports.push_back(s.cur.edge_name(e));
    nodes.push_back(json{{"id", n.id}, {"kind", n.kind}, {"ports", ports}});
  }
  j["nodes"] = nodes;
  j["mol"] = serialize_mol(s.cur);
  j["counts"] = counts_json(kind_counts(s.cur));
  j["rules"] = counts_json(s.totals);
  return j.dump();
}

Trace Session::trace() const {
  if (!state_) return {};
  Trace t = state_->trace;
  t.final_molecule = state_->cur;
  t.status = state_->status.value_or(TerminalStatus::max_cycles);
  return t;
}

void Session::annotate(const std::string& command_json) {
  state_->trace.annotations.push_back(Annotation{cycle_index() + 1, command_json});
}

void Session::advance() {
  auto& s = *state_;
  if (s.status) return;
  const auto index = s.trace.cycles.size() + 1;
  const Rng saved = s.rng;
  auto r = cycle(std::move(s.cur), *s.chem, s.cfg, s.rng, index);
  s.cur = std::move(r.molecule);
  if (r.report.found.empty()) {
    s.rng = saved;
    s.status = TerminalStatus::normal_form;
    running_ = false;
    return;
  }
  if (r.report.applied.empty()) {
    // Every match is disabled by its weight; a later set-weights can resume.
    s.rng = saved;
    s.stalled = true;
    running_ = false;
    return;
  }
  s.stalled = false;
  if (boundary(s.cur, s.chem->kinds()) != s.bound) {
    throw InvariantError("cycle " + std::to_string(index) + " changed the free boundary");
  }
  for (const auto& [k, v] : r.report.rule_histogram) s.totals[k] += v;

  json ev;
  ev["type"] = "cycle-report";
  ev["session"] = id_;
  ev["cycle"] = index;
  ev["found"] = r.report.found.size();
  json applied = json::array();
  for (const auto& m : r.report.applied) {
    applied.push_back(json{{"rule", m.rule}, {"nodes", {m.out_node, m.in_node}}, {"edge", m.edge}});
  }
  ev["applied"] = applied;
  ev["rules"] = counts_json(r.report.rule_histogram);
  ev["counts"] = counts_json(r.report.kind_counts);
  s.trace.cycles.push_back(std::move(r.report));
  if (s.trace.cycles.size() >= s.cfg.max_cycles) {
    s.status = TerminalStatus::max_cycles;
    running_ = false;
  }
  ev["state"] = state_name(true, running_, s.status, s.stalled);
  emit(ev.dump());
}

bool Session::tick() {
  if (!running_ || !state_) return false;
  advance();
  if (!running_) emit(snapshot());
  return running_;
}

void Session::handle(std::string_view message) {
  json rid = nullptr;
  try {
    json cmd;
    try {
      cmd = json::parse(message);
    } catch (const json::parse_error& e) {
      throw CommandError(std::string("malformed command: ") + e.what());
    }
    if (!cmd.is_object()) throw CommandError("command must be a JSON object");
    if (cmd.contains("request-id")) rid = cmd["request-id"];
    if (!cmd.contains("type") || !cmd["type"].is_string()) throw CommandError("command has no type");
    const auto type = cmd["type"].get<std::string>();
    json payload = cmd.value("payload", json::object());
    if (!payload.is_object()) throw CommandError("payload must be an object");
    json recorded{{"type", type}, {"payload", payload}};

    auto ack = [&] {
      emit(json{{"type", "ack"}, {"request-id", rid}, {"command", type}, {"cycle", cycle_index()}}.dump());
    };
    auto need_loaded = [&] {
      if (!state_) throw CommandError(type + ": no molecule loaded");
    };

    if (type == "load") {
      auto st = std::make_shared<State>();
      const auto chem_name = payload.value("chemistry", std::string("chemlambda-v2"));
      if (payload.contains("definition")) {
        st->owned = std::make_shared<const Chemistry>(load_chemistry(payload["definition"].get<std::string>()));
        st->chem = st->owned.get();
      } else {
        try {
          st->chem = &builtin_chemistry(chem_name);
        } catch (const std::exception& e) {
          throw CommandError(e.what());
        }
      }
      if (payload.contains("strategy")) st->cfg.strategy = strategy_from(payload["strategy"]);
      if (payload.contains("seed")) st->cfg.seed = seed_from(payload["seed"]);
      if (payload.contains("weights")) st->cfg.weights = weights_from(payload["weights"], *st->chem);
      st->cfg.max_cycles = 10000;
      if (payload.contains("max_cycles")) {
        const auto& mc = payload["max_cycles"];
        if (!mc.is_number_unsigned() || mc.get<std::uint64_t>() == 0) {
          throw CommandError("max_cycles must be a positive integer");
        }
        st->cfg.max_cycles = mc.get<std::size_t>();
      }
      Molecule m;
      if (payload.contains("lambda")) {
        if (!st->chem->kinds().contains("L") || !st->chem->kinds().contains("A")) {
          throw CommandError("chemistry " + st->chem->name() + " has no lambda nodes");
        }
        m = lambda::to_molecule(lambda::expand_library(lambda::parse_lambda(payload["lambda"].get<std::string>())));
      } else if (payload.contains("mol")) {
        m = parse_mol(payload["mol"].get<std::string>(), st->chem->kinds());
        auto report = validate(m, st->chem->kinds());
        if (!report.ok()) throw CommandError("invalid molecule: " + report.violations.front().message);
      } else {
        throw CommandError("load needs a lambda or mol payload");
      }
      m = close_boundary(m, st->chem->kinds());
      st->trace.chemistry = st->chem->name();
      st->trace.config = st->cfg;
      st->trace.initial = m;
      st->rng = Rng(st->cfg.seed);
      st->cur = comb_pass(m);
      st->bound = boundary(st->cur, st->chem->kinds());
      state_ = std::move(st);
      running_ = false;
      ack();
      emit(snapshot());
    } else if (type == "snapshot") {
      ack();
      emit(snapshot());
    } else if (type == "run") {
      need_loaded();
      if (state_->status) throw CommandError("run: reduction already ended with " + std::string(to_string(*state_->status)));
      annotate(recorded.dump());
      running_ = true;
      state_->stalled = false;
      ack();
    } else if (type == "pause") {
      need_loaded();
      annotate(recorded.dump());
      running_ = false;
      ack();
      emit(snapshot());
    } else if (type == "step") {
      need_loaded();
      std::size_t count = 1;
      if (payload.contains("count")) {
        if (!payload["count"].is_number_unsigned() || payload["count"].get<std::uint64_t>() == 0) {
          throw CommandError("step count must be a positive integer");
        }
        count = payload["count"].get<std::size_t>();
      }
      if (state_->status) throw CommandError("step: reduction already ended with " + std::string(to_string(*state_->status)));
      annotate(recorded.dump());
      running_ = false;
      ack();
      for (std::size_t i = 0; i < count && !state_->status; ++i) {
        const auto before = cycle_index();
        advance();
        if (cycle_index() == before) break;
      }
      emit(snapshot());
    } else if (type == "set-weights" || type == "set-policy" || type == "reseed") {
      need_loaded();
      if (!payload.contains(type == "set-weights" ? "weights" : type == "set-policy" ? "strategy" : "seed")) {
        throw CommandError(type + ": missing payload field");
      }
      ReductionConfig cfg = state_->cfg;
      Rng rng = state_->rng;
      apply_steering(recorded, cfg, rng, *state_->chem);
      state_->cfg = cfg;
      state_->rng = rng;
      state_->stalled = false;
      annotate(recorded.dump());
      ack();
    } else {
      throw CommandError("unknown command " + type);
    }
  } catch (const std::exception& e) {
    emit(json{{"type", "error"}, {"request-id", rid}, {"message", e.what()}}.dump());
  }
}

Trace replay(const Trace& t, const Chemistry& c) {
  Trace out;
  out.chemistry = t.chemistry;
  out.config = t.config;
  out.initial = t.initial;
  out.annotations = t.annotations;
  ReductionConfig cfg = t.config;
  Rng rng(cfg.seed);
  Molecule cur = comb_pass(t.initial);
  auto note = t.annotations.begin();
  auto steer_until = [&](std::size_t index) {
    for (; note != t.annotations.end() && note->before_cycle <= index; ++note) {
      apply_steering(json::parse(note->text), cfg, rng, c);
    }
  };
  for (std::size_t i = 1; i <= t.cycles.size(); ++i) {
    steer_until(i);
    auto r = cycle(std::move(cur), c, cfg, rng, i);
    cur = std::move(r.molecule);
    out.cycles.push_back(std::move(r.report));
  }
  steer_until(static_cast<std::size_t>(-1));
  out.final_molecule = std::move(cur);
  out.status = find_matches(out.final_molecule, c).empty() ? TerminalStatus::normal_form : t.status;
  return out;
}

}  // namespace chemlambda
