// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

// Weighted first-order rule programs: parsing, grounding over finite
// domains, and translation of ground rules into hinge-loss potentials.
//
// Rule file grammar (line oriented, '#' starts a comment):
//
//   predicate Name/arity : observed|free
//   weight : Lit [& Lit]* -> Lit [| Lit]* [^1|^2]
//
// A literal is `[!]Name(arg, ...)`. Arguments starting with an uppercase
// letter are variables; lowercase identifiers and "quoted strings" are
// constants. The optional `^p` suffix selects the hinge exponent (default 2).
//
// Domain file grammar:
//
//   sort name = {c1, c2, ...}
//   sig Pred = (sort, ...)

#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deeppsl/hlmrf.hpp"

namespace deeppsl {

enum class PredicateKind { Observed, Free };

struct Predicate {
  std::string name;
  std::size_t arity = 0;
  PredicateKind kind = PredicateKind::Observed;
};

struct Argument {
  bool is_variable = false;
  std::string text;  // variable name, or the unquoted constant

  bool operator==(const Argument&) const = default;
};

struct Literal {
  std::size_t predicate = 0;  // index into Program::predicates
  std::vector<Argument> arguments;
  bool negated = false;
};

struct Rule {
  double weight = 1.0;
  std::vector<Literal> body;  // conjunction
  std::vector<Literal> head;  // disjunction
  int exponent = 2;
  std::size_t line = 0;
};

struct Program {
  std::vector<Predicate> predicates;
  std::vector<Rule> rules;

  std::optional<std::size_t> find_predicate(std::string_view name) const;

  /// Adds a predicate; throws InputError on a duplicate name.
  std::size_t add_predicate(std::string name, std::size_t arity, PredicateKind kind);
};

Program parse_program(std::string_view text);

/// Renders a program back into the rule file grammar.
std::string to_text(const Program& program);

struct Domain {
  std::map<std::string, std::vector<std::string>> sorts;
  std::map<std::string, std::vector<std::string>> signatures;  // predicate -> sort per position
};

Domain parse_domain(std::string_view text);
std::string to_text(const Domain& domain);

struct GroundAtom {
  std::size_t predicate = 0;
  std::vector<std::string> arguments;

  auto operator<=>(const GroundAtom&) const = default;
};

struct GroundLiteral {
  GroundAtom atom;
  bool negated = false;
};

struct GroundRule {
  std::size_t rule = 0;  // index into Program::rules
  std::map<std::string, std::string> substitution;
  std::vector<GroundLiteral> body;
  std::vector<GroundLiteral> head;
};

/// Dense, deterministic index over the ground atoms of one predicate kind.
class AtomIndex {
 public:
  std::size_t size() const { return atoms_.size(); }
  const GroundAtom& atom(std::size_t i) const { return atoms_[i]; }
  std::optional<std::size_t> find(const GroundAtom& atom) const;
  std::size_t insert(const GroundAtom& atom);

 private:
  std::vector<GroundAtom> atoms_;
  std::map<GroundAtom, std::size_t> lookup_;
};

struct Grounding {
  std::vector<GroundRule> rules;
  AtomIndex observed;  // x variables
  AtomIndex free;      // y variables
};

/// Full cross-product grounding. Every ground atom of every predicate with a
/// signature is indexed, ordered by predicate name and then argument tuple.
Grounding ground(const Program& program, const Domain& domain);

/// Łukasiewicz distance-to-satisfaction of a ground rule as a linear form.
LinearPotential to_potential(const Program& program, const GroundRule& ground_rule, const Grounding& grounding);

/// Builds the energy of all ground rules with positive weight.
HlmrfInstance build_instance(const Program& program, const Grounding& grounding);

std::string format_atom(const Program& program, const GroundAtom& atom);

}  // namespace deeppsl
