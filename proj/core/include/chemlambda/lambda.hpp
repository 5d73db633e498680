#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "chemlambda/molecule.hpp"

namespace chemlambda::lambda {

/// Immutable untyped lambda term with shared subterms.
class Term {
 public:
  enum class Tag { var, abs, app };

  static Term var(std::string name);
  static Term abs(std::string binder, Term body);
  static Term app(Term fn, Term arg);

  Tag tag() const;
  bool is_var() const { return tag() == Tag::var; }
  bool is_abs() const { return tag() == Tag::abs; }
  bool is_app() const { return tag() == Tag::app; }

  /// Variable name, or binder name of an abstraction.
  const std::string& name() const;
  const Term& body() const;
  const Term& fn() const;
  const Term& arg() const;

  std::size_t size() const;

 private:
  struct Node;
  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Prints with '\' binders and minimal parentheses; parse_lambda reads it back.
std::string to_string(const Term& t);

class LambdaParseError : public std::runtime_error {
 public:
  LambdaParseError(std::size_t pos, const std::string& what)
      : std::runtime_error("at " + std::to_string(pos) + ": " + what), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

/// Syntax: `\x.body` or `λx.body` (several binders allowed: `\x y.body`),
/// left-associative application by juxtaposition, parentheses. Identifiers
/// are runs of letters, digits, '_' and '\''. An abstraction extends as far
/// right as possible.
Term parse_lambda(std::string_view text);

std::set<std::string> free_variables(const Term& t);
bool alpha_equivalent(const Term& a, const Term& b);
bool is_normal_form(const Term& t);

struct NormalOrderOutcome {
  std::optional<Term> normal_form;  // empty when fuel ran out
  std::size_t steps = 0;
};

/// Leftmost-outermost beta reduction with capture-avoiding substitution;
/// `fuel` bounds the number of beta steps.
NormalOrderOutcome normal_order_reduce(const Term& t, std::size_t fuel);

/// Church numeral n: \f.\x.f (f ... x).
Term church(unsigned n);

/// Named closed terms: I K S B C W Omega succ pred add mul, and 0..9.
const std::map<std::string, Term>& combinators();

/// Replaces free variables named like library entries by those terms.
Term expand_library(const Term& t);

/// Lambda term -> chemlambda molecule. One L per abstraction, one A per
/// application; a variable used k >= 2 times gets a chain of k-1 FO nodes in
/// textual occurrence order; an unused binder feeds a T. The root is the one
/// dangling out edge; each free variable is one dangling in edge. A term
/// that is a single variable becomes one Arrow.
Molecule to_molecule(const Term& t);

/// Canonical representative used to compare a reduced molecule with a
/// translated term: combs Arrows, drops components without a FROUT, turns every maximal
/// tree of FO/FOE nodes into the FO chain to_molecule would build, with the
/// outputs in the order a depth-first walk from each FROUT meets them.
Molecule sharing_normal_form(const Molecule& m, const KindTable& kinds = KindTable::standard());

}  // namespace chemlambda::lambda
