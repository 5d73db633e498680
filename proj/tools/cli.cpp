#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "chemlambda/chemistry.hpp"
#include "chemlambda/engine.hpp"
#include "chemlambda/lambda.hpp"
#include "chemlambda/mol_format.hpp"
#include "chemlambda/quine.hpp"
#include "serve.hpp"

namespace chemlambda::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string chemistry;
  std::string chemistry_file;
  std::string strategy = "deterministic-greedy";
  std::uint64_t seed = 0;
  std::size_t max_cycles = 1000;
  std::string weights;
  std::string output;

  std::string file;
  std::string lambda;
  std::string term;
  std::string stats;
  std::size_t horizon = 8;
  bool search = false;
  std::size_t max_nodes = 6;
  bool close = false;
  std::string from;
  std::string to;
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Chem {
 public:
  explicit Chem(const Options& o) {
    if (!o.chemistry.empty()) {
      try {
        c_ = &builtin_chemistry(o.chemistry);
      } catch (const ChemistryError& e) {
        throw UsageError(e.what());
      }
    } else if (!o.chemistry_file.empty()) {
      owned_ = std::make_unique<Chemistry>(load_chemistry(read_file(o.chemistry_file)));
      c_ = owned_.get();
    } else {
      c_ = &builtin_chemistry("chemlambda-v2");
    }
  }
  const Chemistry& get() const { return *c_; }

 private:
  std::unique_ptr<Chemistry> owned_;
  const Chemistry* c_ = nullptr;
};

ReductionConfig config(const Options& o) {
  ReductionConfig cfg;
  auto s = parse_strategy(o.strategy);
  if (!s) throw UsageError("unknown strategy " + o.strategy);
  cfg.strategy = *s;
  cfg.seed = o.seed;
  cfg.max_cycles = o.max_cycles;
  try {
    cfg.weights = parse_weights(o.weights);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

Molecule load_mol(const std::string& path, const Chemistry& c) {
  auto m = parse_mol(read_file(path), c.kinds());
  auto report = validate(m, c.kinds());
  if (!report.ok()) throw InputError(path + ": " + report.violations.front().message);
  return m;
}

Molecule from_lambda(const std::string& text, const Chemistry& c) {
  for (const char* k : {"L", "A", "FO", "T", "Arrow"}) {
    if (!c.kinds().contains(k)) throw UsageError("chemistry " + c.name() + " cannot hold lambda terms");
  }
  return lambda::to_molecule(lambda::expand_library(lambda::parse_lambda(text)));
}

// The reduction input: FILE or --lambda, closed.
Molecule input(const Options& o, const Chemistry& c) {
  if (o.file.empty() == o.lambda.empty()) throw UsageError("give exactly one of FILE or --lambda");
  auto m = o.lambda.empty() ? load_mol(o.file, c) : from_lambda(o.lambda, c);
  return close_boundary(m, c.kinds());
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw InputError("cannot write " + path);
      out_ = &file_;
    }
  }
  std::ostream& get() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

std::string_view summary(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::normal_form:
      return "normal form reached";
    case TerminalStatus::max_cycles:
      return "max-cycles reached";
    case TerminalStatus::quine_detected:
      return "quine detected";
    case TerminalStatus::stalled:
      return "stalled: every match has weight 0";
  }
  return "";
}

int cmd_validate(const Options& o, std::ostream& out) {
  Chem chem(o);
  const auto& kinds = chem.get().kinds();
  auto m = parse_mol(read_file(o.file), kinds, MolParseOptions{.check_directions = false});
  auto report = validate(m, kinds);
  Output dst(o.output, out);
  if (report.ok()) {
    auto b = boundary(m, kinds);
    dst.get() << "ok: " << m.size() << " nodes, " << b.free_in.size() << " free in, " << b.free_out.size()
              << " free out\n";
    return 0;
  }
  for (const auto& v : report.violations) dst.get() << v.message << '\n';
  dst.get() << report.violations.size() << (report.violations.size() == 1 ? " violation\n" : " violations\n");
  return 1;
}

int cmd_translate(const Options& o, std::ostream& out) {
  Chem chem(o);
  auto m = from_lambda(o.term, chem.get());
  if (o.close) m = close_boundary(m, chem.get().kinds());
  Output dst(o.output, out);
  dst.get() << serialize_mol(m);
  return 0;
}

int cmd_reduce(const Options& o, std::ostream& out) {
  Chem chem(o);
  auto cfg = config(o);
  auto t = reduce(input(o, chem.get()), chem.get(), cfg);
  Output dst(o.output, out);
  dst.get() << serialize_mol(t.final_molecule);
  out << "# " << summary(t.status) << " after " << t.cycles.size() << (t.cycles.size() == 1 ? " cycle, " : " cycles, ")
      << t.final_molecule.size() << " nodes\n";
  return 0;
}

int cmd_trace(const Options& o, std::ostream& out) {
  Chem chem(o);
  auto cfg = config(o);
  auto t = reduce(input(o, chem.get()), chem.get(), cfg);
  Output dst(o.output, out);
  write_trace(dst.get(), t);
  if (!o.stats.empty()) {
    Output csv(o.stats, out);
    write_stats_csv(csv.get(), stats(t));
  }
  return 0;
}

int cmd_quine(const Options& o, std::ostream& out) {
  Chem chem(o);
  if (o.horizon == 0) throw UsageError("--horizon must be at least 1");
  Output dst(o.output, out);
  if (o.search) {
    if (!o.file.empty()) throw UsageError("--search takes no FILE");
    QuineSearchOptions so;
    so.max_nodes = o.max_nodes;
    so.horizon = o.horizon;
    auto r = quine_search(chem.get(), so);
    for (const auto& q : r.quines) {
      dst.get() << "# quine, " << q.molecule.size() << " nodes, period " << q.period << '\n'
                << serialize_mol(q.molecule) << '\n';
    }
    dst.get() << "# " << r.quines.size() << " quines among " << r.wirings << " molecules of up to " << so.max_nodes
              << " nodes\n";
    return 0;
  }
  if (o.file.empty()) throw UsageError("quine-check needs FILE or --search");
  auto cfg = config(o);
  if (cfg.strategy != Strategy::deterministic_greedy) throw UsageError("quine-check uses deterministic-greedy only");
  auto m = comb_pass(close_boundary(load_mol(o.file, chem.get()), chem.get().kinds()));
  auto r = quine_check(m, chem.get(), cfg, o.horizon);
  if (r.detected) {
    dst.get() << "quine detected at period " << r.period << '\n';
  } else {
    dst.get() << "not detected within horizon " << o.horizon << '\n';
  }
  return 0;
}

int cmd_conflicts(const Options& o, std::ostream& out) {
  Chem chem(o);
  auto m = load_mol(o.file, chem.get());
  auto matches = find_matches(m, chem.get());
  auto pairs = conflicting_pairs(matches);
  Output dst(o.output, out);
  auto show = [](const Match& mt) {
    return mt.rule + " on " + mt.edge + " (nodes " + std::to_string(mt.out_node) + "," + std::to_string(mt.in_node) +
           ")";
  };
  dst.get() << matches.size() << (matches.size() == 1 ? " match\n" : " matches\n");
  for (const auto& [a, b] : pairs) dst.get() << "conflict: " << show(a) << " / " << show(b) << '\n';
  dst.get() << pairs.size() << (pairs.size() == 1 ? " conflict pair\n" : " conflict pairs\n");
  return 0;
}

int cmd_translate_chem(const Options& o, std::ostream& out) {
  const Chemistry* from = nullptr;
  try {
    from = &builtin_chemistry(o.from);
    builtin_chemistry(o.to);
  } catch (const ChemistryError& e) {
    throw UsageError(e.what());
  }
  const KindTranslation* t = nullptr;
  try {
    t = &builtin_translation(o.from, o.to);
  } catch (const ChemistryError& e) {
    throw UsageError(e.what());
  }
  auto m = load_mol(o.file, *from);
  Output dst(o.output, out);
  dst.get() << serialize_mol(translate(m, *t));
  return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
  serve::Server server(o.address, o.port);
  out << "listening on ws://" << o.address << ':' << server.port() << "/session\n" << std::flush;
  server.run();
  return 0;
}

void chemistry_flags(CLI::App* sub, Options& o) {
  sub->add_option("--chemistry", o.chemistry, "Built-in chemistry: chemlambda-v2, ic, diric");
  sub->add_option("--chemistry-file", o.chemistry_file, "Chemistry definition file");
}

void engine_flags(CLI::App* sub, Options& o) {
  sub->add_option("--strategy", o.strategy, "deterministic-greedy or weighted-random");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--max-cycles", o.max_cycles, "Cycle limit")->check(CLI::PositiveNumber);
  sub->add_option("--weights", o.weights, "Rule weights, e.g. BETA=0,FO-FOE=2");
}

void output_flag(CLI::App* sub, Options& o) { sub->add_option("--output,-o", o.output, "Write to this file"); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Port-graph rewriting for chemlambda, IC and dirIC"};
  app.name("chemlambda");
  app.require_subcommand(1);
  Options o;

  auto* validate_cmd = app.add_subcommand("validate", "Check a mol file");
  validate_cmd->add_option("FILE", o.file)->required();
  chemistry_flags(validate_cmd, o);
  output_flag(validate_cmd, o);

  auto* translate_cmd = app.add_subcommand("translate", "Lambda term to mol");
  translate_cmd->add_option("TERM", o.term)->required();
  translate_cmd->add_flag("--close", o.close, "Cap free edges with FRIN/FROUT");
  chemistry_flags(translate_cmd, o);
  output_flag(translate_cmd, o);

  auto* reduce_cmd = app.add_subcommand("reduce", "Reduce to normal form or the cycle limit");
  reduce_cmd->add_option("FILE", o.file);
  reduce_cmd->add_option("--lambda", o.lambda, "Reduce this lambda term instead of a file");
  chemistry_flags(reduce_cmd, o);
  engine_flags(reduce_cmd, o);
  output_flag(reduce_cmd, o);

  auto* trace_cmd = app.add_subcommand("trace", "Reduce and write the trace");
  trace_cmd->add_option("FILE", o.file);
  trace_cmd->add_option("--lambda", o.lambda, "Trace this lambda term instead of a file");
  trace_cmd->add_option("--stats", o.stats, "Also write per-cycle statistics as CSV");
  chemistry_flags(trace_cmd, o);
  engine_flags(trace_cmd, o);
  output_flag(trace_cmd, o);

  auto* quine_cmd = app.add_subcommand("quine-check", "Test a molecule for recurrence, or search small molecules");
  quine_cmd->add_option("FILE", o.file);
  quine_cmd->add_option("--horizon", o.horizon, "Largest period tried");
  quine_cmd->add_flag("--search", o.search, "Enumerate closed molecules instead of reading FILE");
  quine_cmd->add_option("--max-nodes", o.max_nodes, "Search size limit");
  chemistry_flags(quine_cmd, o);
  engine_flags(quine_cmd, o);
  output_flag(quine_cmd, o);

  auto* conflicts_cmd = app.add_subcommand("conflicts", "List matches sharing a node");
  conflicts_cmd->add_option("FILE", o.file)->required();
  chemistry_flags(conflicts_cmd, o);
  output_flag(conflicts_cmd, o);

  auto* tchem_cmd = app.add_subcommand("translate-chem", "Map node kinds between chemistries");
  tchem_cmd->add_option("FILE", o.file)->required();
  tchem_cmd->add_option("--from", o.from)->required();
  tchem_cmd->add_option("--to", o.to)->required();
  output_flag(tchem_cmd, o);

  auto* serve_cmd = app.add_subcommand("serve", "Start the websocket session endpoint");
  serve_cmd->add_option("--port", o.port, "TCP port (0 picks one)");
  serve_cmd->add_option("--address", o.address, "Listen address");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate_cmd) return cmd_validate(o, out);
    if (*translate_cmd) return cmd_translate(o, out);
    if (*reduce_cmd) return cmd_reduce(o, out);
    if (*trace_cmd) return cmd_trace(o, out);
    if (*quine_cmd) return cmd_quine(o, out);
    if (*conflicts_cmd) return cmd_conflicts(o, out);
    if (*tchem_cmd) return cmd_translate_chem(o, out);
    if (*serve_cmd) return cmd_serve(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace chemlambda::cli
