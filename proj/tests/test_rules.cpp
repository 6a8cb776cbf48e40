// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "deeppsl/error.hpp"
#include "deeppsl/rules.hpp"
#include "doctest.h"

using namespace deeppsl;

namespace {

const char* kCatProgram = R"(
predicate HasFur/1 : observed
predicate IsCat/1 : free
1.0: HasFur(X) -> IsCat(X)
)";

std::string parse_error(std::string_view text) {
  try {
    parse_program(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "no error";
}

}  // namespace

TEST_CASE("parse: single implication") {
  auto p = parse_program(kCatProgram);
  REQUIRE(p.rules.size() == 1);
  const auto& r = p.rules[0];
  CHECK(r.weight == 1.0);
  CHECK(r.exponent == 2);
  REQUIRE(r.body.size() == 1);
  REQUIRE(r.head.size() == 1);
  CHECK(p.predicates[r.body[0].predicate].name == "HasFur");
  CHECK(p.predicates[r.head[0].predicate].name == "IsCat");
  CHECK(r.body[0].arguments[0].is_variable);
  CHECK(r.body[0].arguments[0].text == "X");
}

TEST_CASE("parse: negated attribute pair with quoted constant") {
  auto p = parse_program(R"(
predicate A1/1 : observed
predicate Label/2 : free
0.7: !A1(I) -> !Label(I,"c")
)");
  REQUIRE(p.rules.size() == 1);
  const auto& r = p.rules[0];
  CHECK(r.weight == doctest::Approx(0.7));
  CHECK(r.body[0].negated);
  CHECK(r.head[0].negated);
  CHECK_FALSE(r.head[0].arguments[1].is_variable);
  CHECK(r.head[0].arguments[1].text == "c");
}

TEST_CASE("parse: conjunctive body, disjunctive head, exponent suffix") {
  auto p = parse_program(R"(
predicate A/1 : observed
predicate B/1 : observed
predicate C/1 : free
predicate D/1 : free
1.0: A(X) & B(X) -> C(X)
2.5 : A(X) -> C(X) | D(X) ^1
)");
  REQUIRE(p.rules.size() == 2);
  CHECK(p.rules[0].body.size() == 2);
  CHECK(p.rules[1].head.size() == 2);
  CHECK(p.rules[1].exponent == 1);
}

TEST_CASE("parse: comments, blank lines and lowercase constants") {
  auto p = parse_program("# header\n\npredicate P/2 : free  # trailing\n0.5 : P(a, X) -> P(X, b)\n");
  REQUIRE(p.rules.size() == 1);
  CHECK_FALSE(p.rules[0].body[0].arguments[0].is_variable);
  CHECK(p.rules[0].body[0].arguments[1].is_variable);
}

TEST_CASE("parse: errors carry line and column") {
  CHECK(parse_error("predicate A/1 : free\n1.0 : B(X) -> A(X)\n").find("line 2") != std::string::npos);
  CHECK(parse_error("predicate A/1 : free\n1.0 : B(X) -> A(X)\n").find("unknown predicate") != std::string::npos);
  CHECK(parse_error("predicate A/1 : free\n1.0 : A(X, Y) -> A(X)\n").find("arity") != std::string::npos);
  CHECK(parse_error("predicate A/1 : free\n-1.0 : A(X) -> A(X)\n").find("line 2") != std::string::npos);
  CHECK(parse_error("predicate A/1 : free\n1.0 : A(X) -> -> A(X)\n").find("line 2, column") != std::string::npos);
  CHECK(parse_error("predicate A/1 : free\npredicate A/2 : free\n").find("line 2") != std::string::npos);
  CHECK(parse_error("predicate A/1 : maybe\n").find("line 1") != std::string::npos);
  CHECK(parse_error("predicate A/1 : free\n1.0 : A(X) -> A(X) extra\n").find("line 2") != std::string::npos);
}

TEST_CASE("parse: program text round-trips") {
  auto p = parse_program(R"(
predicate A/1 : observed
predicate C/2 : free
0.25 : A(X) & !A(y) -> C(X, "Mixed Case") | !C(X, z) ^1
)");
  auto q = parse_program(to_text(p));
  CHECK(to_text(q) == to_text(p));
  CHECK(q.rules[0].head[0].arguments[1].text == "Mixed Case");
}

TEST_CASE("domain: parse, duplicates rejected, round-trip") {
  auto d = parse_domain("sort animal = {k1, k2, \"big cat\"}\nsig IsCat = (animal)\n");
  CHECK(d.sorts.at("animal").size() == 3);
  CHECK(d.signatures.at("IsCat") == std::vector<std::string>{"animal"});
  CHECK(to_text(parse_domain(to_text(d))) == to_text(d));
  CHECK_THROWS_AS(parse_domain("sort s = {a, a}\n"), InputError);
  CHECK_THROWS_AS(parse_domain("sort s = {a, b\n"), InputError);
}

TEST_CASE("ground: one variable over two constants gives two rules") {
  auto p = parse_program(kCatProgram);
  auto d = parse_domain("sort animal = {k1, k2}\nsig HasFur = (animal)\nsig IsCat = (animal)\n");
  auto g = ground(p, d);
  CHECK(g.rules.size() == 2);
  CHECK(g.observed.size() == 2);
  CHECK(g.free.size() == 2);
  CHECK(g.rules[0].substitution.at("X") == "k1");
  CHECK(g.rules[1].substitution.at("X") == "k2");
}

TEST_CASE("ground: rule without variables grounds once") {
  auto p = parse_program("predicate A/1 : observed\npredicate C/1 : free\n1.0 : A(k) -> C(k)\n");
  auto d = parse_domain("sort s = {k, j}\nsig A = (s)\nsig C = (s)\n");
  auto g = ground(p, d);
  CHECK(g.rules.size() == 1);
  CHECK(g.rules[0].substitution.empty());
}

TEST_CASE("ground: count is the product of variable sort sizes") {
  auto p = parse_program("predicate R/2 : observed\npredicate S/3 : free\n1.0 : R(X, Y) -> S(X, Y, Z)\n");
  auto d = parse_domain("sort a = {a1, a2, a3}\nsort b = {b1, b2}\nsort c = {c1, c2, c3, c4}\n"
                        "sig R = (a, b)\nsig S = (a, b, c)\n");
  CHECK(ground(p, d).rules.size() == 3 * 2 * 4);
}

TEST_CASE("ground: attribute program has 2 a z ground rules for one image") {
  for (int a = 1; a <= 4; ++a) {
    for (int z = 1; z <= 3; ++z) {
      std::string rules;
      std::string domain = "sort image = {img}\nsort class = {";
      for (int c = 0; c < z; ++c) domain += (c ? ", c" : "c") + std::to_string(c);
      domain += "}\nsig Label = (image, class)\n";
      for (int i = 1; i <= a; ++i) {
        rules += "predicate A" + std::to_string(i) + "/1 : observed\n";
        domain += "sig A" + std::to_string(i) + " = (image)\n";
      }
      rules += "predicate Label/2 : free\n";
      for (int i = 1; i <= a; ++i) {
        rules += "0.5 : A" + std::to_string(i) + "(I) -> Label(I, C)\n";
        rules += "0.5 : !A" + std::to_string(i) + "(I) -> !Label(I, C)\n";
      }
      CHECK(ground(parse_program(rules), parse_domain(domain)).rules.size() == static_cast<std::size_t>(2 * a * z));
    }
  }
}

TEST_CASE("ground: atom indices sorted by predicate name then arguments") {
  auto p = parse_program("predicate Zed/1 : free\npredicate Alpha/1 : free\n1.0 : Zed(X) -> Alpha(X)\n");
  auto d = parse_domain("sort s = {b, a}\nsig Zed = (s)\nsig Alpha = (s)\n");
  auto g = ground(p, d);
  REQUIRE(g.free.size() == 4);
  CHECK(format_atom(p, g.free.atom(0)) == "Alpha(a)");
  CHECK(format_atom(p, g.free.atom(1)) == "Alpha(b)");
  CHECK(format_atom(p, g.free.atom(2)) == "Zed(a)");
  CHECK(format_atom(p, g.free.atom(3)) == "Zed(b)");
}

TEST_CASE("ground: domain errors") {
  auto p = parse_program(kCatProgram);
  CHECK_THROWS_AS(ground(p, parse_domain("sort animal = {k1}\nsig HasFur = (animal)\n")), InputError);
  CHECK_THROWS_AS(ground(p, parse_domain("sig HasFur = (animal)\nsig IsCat = (animal)\n")), InputError);
  auto q = parse_program("predicate A/1 : observed\npredicate C/1 : free\n1.0 : A(zz) -> C(zz)\n");
  CHECK_THROWS_AS(ground(q, parse_domain("sort s = {k}\nsig A = (s)\nsig C = (s)\n")), InputError);
  auto r = parse_program("predicate A/1 : observed\npredicate C/1 : free\n1.0 : A(X) -> C(X)\n");
  CHECK_THROWS_AS(ground(r, parse_domain("sort s = {k}\nsort t = {k}\nsig A = (s)\nsig C = (t)\n")), InputError);
}

TEST_CASE("to_potential: worked examples") {
  auto setup = [](const std::string& rule) {
    auto p = parse_program("predicate A/1 : observed\npredicate B/1 : observed\npredicate C/1 : free\n" + rule);
    auto d = parse_domain("sort s = {k}\nsig A = (s)\nsig B = (s)\nsig C = (s)\n");
    auto g = ground(p, d);
    return std::pair{to_potential(p, g.rules[0], g), g};
  };
  SUBCASE("A -> C") {
    auto [pot, g] = setup("1.0 : A(k) -> C(k)\n");
    std::vector<double> x{0.8, 0.0};  // A(k), B(k)
    std::vector<double> y{0.3};
    CHECK(pot.linear(x, y) == doctest::Approx(0.5));
    CHECK(pot.value(x, y) == doctest::Approx(0.25));
  }
  SUBCASE("!A -> !C") {
    auto [pot, g] = setup("1.0 : !A(k) -> !C(k)\n");
    std::vector<double> x{0.8, 0.0};
    std::vector<double> y{0.3};
    CHECK(pot.linear(x, y) == doctest::Approx(0.3 - 0.8));
    CHECK(pot.value(x, y) == 0.0);
  }
  SUBCASE("A & B -> C") {
    auto [pot, g] = setup("1.0 : A(k) & B(k) -> C(k)\n");
    std::vector<double> x{0.9, 0.8};
    std::vector<double> y{0.5};
    CHECK(pot.linear(x, y) == doctest::Approx(0.2));
    CHECK(pot.value(x, y) == doctest::Approx(0.04));
  }
}

TEST_CASE("to_potential: clausal form equals Lukasiewicz distance on a 0.1 grid") {
  // Five distinct free atoms; every negation pattern for m <= 3, n <= 2.
  const std::string decl =
      "predicate P0/1 : free\npredicate P1/1 : free\npredicate P2/1 : free\n"
      "predicate P3/1 : free\npredicate P4/1 : free\n";
  const std::string domain =
      "sort s = {k}\nsig P0 = (s)\nsig P1 = (s)\nsig P2 = (s)\nsig P3 = (s)\nsig P4 = (s)\n";
  double worst = 0.0;
  std::size_t evaluations = 0;
  for (int m = 1; m <= 3; ++m) {
    for (int n = 1; n <= 2; ++n) {
      const int k = m + n;
      for (int mask = 0; mask < (1 << k); ++mask) {
        std::string rule = "1.0 : ";
        for (int i = 0; i < k; ++i) {
          if (i == m) rule += " -> ";
          else if (i > 0) rule += i < m ? " & " : " | ";
          rule += ((mask >> i) & 1 ? "!P" : "P") + std::to_string(i) + "(k)";
        }
        rule += " ^1\n";
        auto p = parse_program(decl + rule);
        auto g = ground(p, parse_domain(domain));
        auto pot = to_potential(p, g.rules[0], g);
        std::vector<int> digits(k, 0);
        std::vector<double> y(5, 0.0);
        while (true) {
          for (int i = 0; i < k; ++i) y[i] = digits[i] / 10.0;
          double body = 0.0;
          double head = 0.0;
          for (int i = 0; i < k; ++i) {
            const double t = (mask >> i) & 1 ? 1.0 - y[i] : y[i];
            (i < m ? body : head) += t;
          }
          const double conj = std::max(0.0, body - (m - 1));
          const double disj = std::min(1.0, head);
          const double expected = std::max(0.0, conj - disj);
          worst = std::max(worst, std::abs(pot.value({}, y) - expected));
          ++evaluations;
          int d = 0;
          while (d < k && ++digits[d] == 11) digits[d++] = 0;
          if (d == k) break;
        }
      }
    }
  }
  CHECK(evaluations > 100000);
  CHECK(worst < 1e-12);
}

TEST_CASE("to_potential: single-literal rule is satisfied exactly when head >= body") {
  auto p = parse_program("predicate A/1 : free\npredicate C/1 : free\n1.0 : A(k) -> C(k)\n");
  auto g = ground(p, parse_domain("sort s = {k}\nsig A = (s)\nsig C = (s)\n"));
  auto pot = to_potential(p, g.rules[0], g);
  for (int a = 0; a <= 10; ++a) {
    for (int c = 0; c <= 10; ++c) {
      std::vector<double> y{a / 10.0, c / 10.0};
      CHECK((pot.value({}, y) == 0.0) == (c >= a));
    }
  }
}

TEST_CASE("build_instance: zero-weight rules are dropped") {
  auto p = parse_program(
      "predicate A/1 : observed\npredicate C/1 : free\n0.0 : A(X) -> C(X)\n1.5 : !A(X) -> !C(X)\n");
  auto g = ground(p, parse_domain("sort s = {k1, k2}\nsig A = (s)\nsig C = (s)\n"));
  CHECK(g.rules.size() == 4);
  auto inst = build_instance(p, g);
  CHECK(inst.potentials().size() == 2);
  for (const auto& pot : inst.potentials()) CHECK(pot.weight == 1.5);
}
