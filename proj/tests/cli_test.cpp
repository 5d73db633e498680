#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = chemlambda::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string corpus(const std::string& name) { return std::string(CHEMLAMBDA_CORPUS_DIR) + "/" + name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "chemlambda-cli-test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("validate") {
  auto ok = run({"validate", corpus("conflict.mol")});
  CHECK(ok.code == 0);
  CHECK(ok.out == "ok: 3 nodes, 2 free in, 3 free out\n");
  auto bad = run({"validate", corpus("invalid.mol")});
  CHECK(bad.code == 1);
  CHECK(bad.out == "edge y joins two out slots\nedge w joins two in slots\n2 violations\n");
  auto missing = run({"validate", corpus("nope.mol")});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("cannot read") != std::string::npos);
  auto ic = run({"validate", corpus("ic-annihilate.mol")});
  CHECK(ic.code == 1);
  CHECK(run({"validate", corpus("ic-annihilate.mol"), "--chemistry", "ic"}).code == 0);
}

TEST_CASE("translate") {
  CHECK(run({"translate", "\\x.x"}).out == "L e0 e0 e1\n");
  CHECK(run({"translate", "K"}).out == slurp(corpus("lambda/K.mol")));
  CHECK(run({"translate", "\\x.x", "--close"}).out == "L e0 e0 e1\nFROUT e1\n");
  auto bad = run({"translate", "\\x"});
  CHECK(bad.code == 1);
  CHECK(bad.err.rfind("error: at ", 0) == 0);
  CHECK(run({"translate", "x", "--chemistry", "ic"}).code == 2);
}

TEST_CASE("reduce") {
  auto skk = run({"reduce", corpus("lambda/SKK.mol")});
  CHECK(skk.code == 0);
  CHECK(skk.out.find("# normal form reached after ") != std::string::npos);
  auto omega = run({"reduce", "--lambda", "(\\x.x x)(\\x.x x)", "--max-cycles", "50", "--chemistry", "chemlambda-v2",
                    "--strategy", "deterministic-greedy", "--seed", "1"});
  CHECK(omega.code == 0);
  CHECK(omega.out.find("# max-cycles reached after 50 cycles") != std::string::npos);
  auto stalled = run({"reduce", "--lambda", "I I", "--strategy", "weighted-random", "--weights", "BETA=0"});
  CHECK(stalled.out.find("# stalled") != std::string::npos);
  auto file = scratch("skk.mol");
  auto written = run({"reduce", corpus("lambda/SKK.mol"), "-o", file.string()});
  CHECK(written.out.rfind("# normal form", 0) == 0);
  CHECK(skk.out.rfind(slurp(file), 0) == 0);
  auto ic = run({"reduce", corpus("ic-annihilate.mol"), "--chemistry", "ic"});
  CHECK(ic.code == 0);
  CHECK(ic.out.find("# normal form reached after 1 cycle, 16 nodes") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"reduce"}).code == 2);
  CHECK(run({"reduce", corpus("lambda/I.mol"), "--lambda", "I"}).code == 2);
  CHECK(run({"reduce", "--lambda", "I", "--max-cycles", "0"}).code == 2);
  CHECK(run({"reduce", "--lambda", "I", "--strategy", "sometimes"}).code == 2);
  CHECK(run({"reduce", "--lambda", "I", "--weights", "BETA=-1"}).code == 2);
  CHECK(run({"reduce", "--lambda", "I", "--chemistry", "nope"}).code == 2);
  CHECK(run({"quine-check", corpus("quine-period1.mol"), "--horizon", "0"}).code == 2);
  CHECK(run({"quine-check", corpus("quine-period1.mol"), "--strategy", "weighted-random"}).code == 2);
  CHECK(run({"translate-chem", corpus("ic-annihilate.mol"), "--from", "diric", "--to", "ic"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("trace and stats") {
  auto csv = scratch("skk.csv");
  auto t = run({"trace", "--lambda", "S K K", "--stats", csv.string()});
  CHECK(t.code == 0);
  std::istringstream in(t.out);
  std::vector<nlohmann::json> recs;
  for (std::string line; std::getline(in, line);) recs.push_back(nlohmann::json::parse(line));
  REQUIRE(recs.size() >= 3);
  CHECK(recs.front()["record"] == "header");
  CHECK(recs.back()["record"] == "end");
  CHECK(recs.back()["status"] == "normal-form");
  auto table = slurp(csv);
  CHECK(table.rfind("cycle,found,applied,", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == static_cast<long>(recs.size() - 1));
  auto file = run({"trace", corpus("lambda/Omega.mol"), "--max-cycles", "20", "--strategy", "weighted-random",
                   "--seed", "5"});
  CHECK(file.out.find("\"status\":\"max-cycles\"") != std::string::npos);
}

TEST_CASE("quine-check") {
  CHECK(run({"quine-check", corpus("quine-period1.mol"), "--horizon", "4"}).out == "quine detected at period 1\n");
  CHECK(run({"quine-check", corpus("lambda/SKK.mol"), "--horizon", "10"}).out == "not detected within horizon 10\n");
  auto search = run({"quine-check", "--search", "--max-nodes", "4", "--horizon", "2"});
  CHECK(search.code == 0);
  CHECK(search.out.find(" quines among ") != std::string::npos);
}

TEST_CASE("conflicts") {
  auto r = run({"conflicts", corpus("conflict.mol")});
  CHECK(r.code == 0);
  CHECK(r.out == "2 matches\nconflict: A-FOE on d (nodes 1,2) / BETA on x (nodes 0,1)\n1 conflict pair\n");
  auto d = run({"conflicts", corpus("lambda/I.mol")});
  CHECK(d.out == "0 matches\n0 conflict pairs\n");
}

TEST_CASE("translate-chem") {
  auto r = run({"translate-chem", corpus("ic-annihilate.mol"), "--from", "ic", "--to", "diric"});
  CHECK(r.code == 0);
  CHECK(r.out == "L a b x\nA x c d\nFI e f y\nFOE y g h\nL i j z\nFOE z k l\n");
  auto c = run({"conflicts", corpus("ic-annihilate.mol"), "--chemistry", "ic"});
  CHECK(c.out == "3 matches\n0 conflict pairs\n");
}

TEST_CASE("output is byte-identical across runs") {
  const std::vector<std::vector<std::string>> commands = {
      {"reduce", corpus("lambda/Omega.mol"), "--max-cycles", "30", "--strategy", "weighted-random", "--seed", "9"},
      {"trace", corpus("lambda/pred.mol"), "--strategy", "weighted-random", "--seed", "3"},
      {"trace", corpus("shuffle-lhs.mol")},
      {"translate", "S (K I) (W B)"},
      {"conflicts", corpus("conflict.mol")},
  };
  for (const auto& c : commands) {
    auto a = run(c);
    auto b = run(c);
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
  }
}
