#include <doctest.h>

#include "chemlambda/iso.hpp"
#include "chemlambda/mol_format.hpp"
#include "chemlambda/quine.hpp"
#include "support/quine_oracle.hpp"

using namespace chemlambda;

namespace {

const Chemistry& v2() { return builtin_chemistry("chemlambda-v2"); }

// Every oracle class appears in the search result and vice versa.
void same_classes(const QuineSearchResult& found, const testing::OracleResult& oracle) {
  CHECK(found.quines.size() == oracle.quines.size());
  for (const auto& q : oracle.quines) {
    bool hit = false;
    for (const auto& f : found.quines) hit = hit || isomorphic(f.molecule, q.molecule);
    INFO(serialize_mol(q.molecule));
    CHECK(hit);
  }
  for (const auto& f : found.quines) {
    bool hit = false;
    for (const auto& q : oracle.quines) {
      if (testing::brute_isomorphic(f.molecule, q.molecule)) {
        hit = true;
        CHECK(f.period == q.period);
      }
    }
    INFO(serialize_mol(f.molecule));
    CHECK(hit);
  }
}

}  // namespace

TEST_CASE("search matches brute force over every kind up to 4 nodes") {
  const std::vector<std::string> kinds = {"A", "FI", "FO", "FOE", "FRIN", "FROUT", "L", "T"};
  QuineSearchOptions o;
  o.max_nodes = 4;
  o.horizon = 4;
  auto found = quine_search(v2(), o);
  auto oracle = testing::brute_quines(v2(), kinds, 4, 4);
  same_classes(found, oracle);
  CHECK(found.wirings <= oracle.wirings);
}

TEST_CASE("search matches brute force over fan nodes up to 5 nodes") {
  const std::vector<std::string> kinds = {"FI", "FO", "FOE", "T"};
  QuineSearchOptions o;
  o.max_nodes = 5;
  o.horizon = 3;
  o.kinds = kinds;
  same_classes(quine_search(v2(), o), testing::brute_quines(v2(), kinds, 5, 3));
}

TEST_CASE("reported quines are closed, connected and recur") {
  QuineSearchOptions o;
  o.max_nodes = 4;
  o.horizon = 4;
  for (const auto& q : quine_search(v2(), o).quines) {
    CHECK(boundary(q.molecule, v2().kinds()).empty());
    CHECK(testing::connected(q.molecule));
    auto r = quine_check(q.molecule, v2(), ReductionConfig{}, o.horizon);
    CHECK(r.detected);
    CHECK(r.period == q.period);
    CHECK(canonical_code(q.molecule) == q.canonical);
  }
}

TEST_CASE("search options are checked") {
  QuineSearchOptions o;
  o.horizon = 0;
  CHECK_THROWS_AS(quine_search(v2(), o), std::invalid_argument);
  o.horizon = 1;
  o.kinds = {"NOPE"};
  CHECK_THROWS(quine_search(v2(), o));
}
