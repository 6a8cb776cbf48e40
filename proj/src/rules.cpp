// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "deeppsl/rules.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "deeppsl/error.hpp"

namespace deeppsl {

namespace {

// Cursor over a single line with 1-based column reporting.
class LineCursor {
 public:
  LineCursor(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  void skip_space() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_space();
    return pos_ >= line_.size();
  }

  char peek() {
    skip_space();
    return pos_ < line_.size() ? line_[pos_] : '\0';
  }

  bool accept(std::string_view token) {
    skip_space();
    if (line_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view token) {
    if (!accept(token)) fail("expected `" + std::string(token) + "`");
  }

  std::string identifier() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < line_.size() &&
           (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_ || std::isdigit(static_cast<unsigned char>(line_[start]))) {
      pos_ = start;
      fail("expected an identifier");
    }
    return std::string(line_.substr(start, pos_ - start));
  }

  std::string quoted() {
    skip_space();
    std::size_t start = pos_;
    if (pos_ >= line_.size() || line_[pos_] != '"') fail("expected a quoted string");
    ++pos_;
    std::string out;
    while (pos_ < line_.size() && line_[pos_] != '"') out.push_back(line_[pos_++]);
    if (pos_ >= line_.size()) {
      pos_ = start;
      fail("unterminated string");
    }
    ++pos_;
    return out;
  }

  // Constant: quoted string or identifier not starting with an uppercase letter.
  std::string constant() {
    if (peek() == '"') return quoted();
    std::size_t start = pos_;
    std::string id = identifier();
    if (std::isupper(static_cast<unsigned char>(id[0]))) {
      pos_ = start;
      fail("constants must be quoted or start with a lowercase letter");
    }
    return id;
  }

  double number() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < line_.size() && (std::isdigit(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '.' ||
                                   line_[pos_] == 'e' || line_[pos_] == 'E' || line_[pos_] == '-' ||
                                   line_[pos_] == '+')) {
      ++pos_;
    }
    double value = 0.0;
    auto text = line_.substr(start, pos_ - start);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
      pos_ = start;
      fail("expected a number");
    }
    return value;
  }

  std::size_t integer() {
    skip_space();
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(line_.data() + pos_, line_.data() + line_.size(), value);
    if (ec != std::errc()) fail("expected a non-negative integer");
    pos_ = static_cast<std::size_t>(ptr - line_.data());
    return value;
  }

  std::size_t column() const { return pos_ + 1; }
  std::size_t line_no() const { return line_no_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_no_, pos_ + 1, what); }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(strip_comment(line), line_no);
  }
}

Literal parse_literal(LineCursor& cur, const Program& program) {
  Literal lit;
  lit.negated = cur.accept("!");
  std::size_t col = cur.column();
  std::string name = cur.identifier();
  auto pred = program.find_predicate(name);
  if (!pred) throw ParseError(cur.line_no(), col, "unknown predicate `" + name + "`");
  lit.predicate = *pred;
  cur.expect("(");
  if (!cur.accept(")")) {
    do {
      Argument arg;
      if (cur.peek() == '"') {
        arg.text = cur.quoted();
      } else {
        arg.text = cur.identifier();
        arg.is_variable = std::isupper(static_cast<unsigned char>(arg.text[0])) != 0;
      }
      lit.arguments.push_back(std::move(arg));
    } while (cur.accept(","));
    cur.expect(")");
  }
  const auto& p = program.predicates[lit.predicate];
  if (lit.arguments.size() != p.arity) {
    throw ParseError(cur.line_no(), col,
                     "predicate `" + p.name + "` has arity " + std::to_string(p.arity) + " but got " +
                         std::to_string(lit.arguments.size()) + " arguments");
  }
  return lit;
}

std::string format_constant(const std::string& c) {
  bool bare = !c.empty() && std::islower(static_cast<unsigned char>(c[0]));
  for (char ch : c) bare = bare && (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_');
  return bare ? c : "\"" + c + "\"";
}

std::string format_literal(const Program& program, const Literal& lit) {
  std::string out = lit.negated ? "!" : "";
  out += program.predicates[lit.predicate].name + "(";
  for (std::size_t i = 0; i < lit.arguments.size(); ++i) {
    if (i) out += ", ";
    const auto& a = lit.arguments[i];
    out += a.is_variable ? a.text : format_constant(a.text);
  }
  return out + ")";
}

}  // namespace

std::optional<std::size_t> Program::find_predicate(std::string_view name) const {
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    if (predicates[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Program::add_predicate(std::string name, std::size_t arity, PredicateKind kind) {
  if (find_predicate(name)) throw InputError("predicate `" + name + "` declared twice");
  predicates.push_back({std::move(name), arity, kind});
  return predicates.size() - 1;
}

Program parse_program(std::string_view text) {
  Program program;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    LineCursor cur(line, line_no);
    if (cur.at_end()) return;

    if (cur.accept("predicate ")) {
      std::size_t col = cur.column();
      std::string name = cur.identifier();
      cur.expect("/");
      std::size_t arity = cur.integer();
      cur.expect(":");
      std::string kind = cur.identifier();
      PredicateKind k;
      if (kind == "observed") {
        k = PredicateKind::Observed;
      } else if (kind == "free") {
        k = PredicateKind::Free;
      } else {
        cur.fail("predicate kind must be `observed` or `free`");
      }
      if (!cur.at_end()) cur.fail("trailing input");
      if (program.find_predicate(name)) throw ParseError(line_no, col, "predicate `" + name + "` declared twice");
      program.predicates.push_back({name, arity, k});
      return;
    }

    Rule rule;
    rule.line = line_no;
    std::size_t weight_col = cur.column();
    rule.weight = cur.number();
    if (rule.weight < 0.0) throw ParseError(line_no, weight_col, "rule weight must be non-negative");
    cur.expect(":");
    do {
      rule.body.push_back(parse_literal(cur, program));
    } while (cur.accept("&"));
    cur.expect("->");
    do {
      rule.head.push_back(parse_literal(cur, program));
    } while (cur.accept("|"));
    if (cur.accept("^")) {
      std::size_t p = cur.integer();
      if (p != 1 && p != 2) cur.fail("exponent must be 1 or 2");
      rule.exponent = static_cast<int>(p);
    }
    if (!cur.at_end()) cur.fail("trailing input");
    program.rules.push_back(std::move(rule));
  });
  return program;
}

std::string to_text(const Program& program) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& p : program.predicates) {
    out << "predicate " << p.name << '/' << p.arity << " : "
        << (p.kind == PredicateKind::Observed ? "observed" : "free") << '\n';
  }
  for (const auto& r : program.rules) {
    out << r.weight << " : ";
    for (std::size_t i = 0; i < r.body.size(); ++i) out << (i ? " & " : "") << format_literal(program, r.body[i]);
    out << " -> ";
    for (std::size_t i = 0; i < r.head.size(); ++i) out << (i ? " | " : "") << format_literal(program, r.head[i]);
    if (r.exponent != 2) out << " ^" << r.exponent;
    out << '\n';
  }
  return out.str();
}

Domain parse_domain(std::string_view text) {
  Domain domain;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    LineCursor cur(line, line_no);
    if (cur.at_end()) return;
    if (cur.accept("sort ")) {
      std::size_t col = cur.column();
      std::string name = cur.identifier();
      cur.expect("=");
      cur.expect("{");
      std::vector<std::string> constants;
      std::set<std::string> seen;
      if (!cur.accept("}")) {
        do {
          std::size_t c_col = cur.column();
          std::string c = cur.constant();
          if (!seen.insert(c).second) throw ParseError(line_no, c_col, "duplicate constant `" + c + "`");
          constants.push_back(std::move(c));
        } while (cur.accept(","));
        cur.expect("}");
      }
      if (!cur.at_end()) cur.fail("trailing input");
      if (domain.sorts.count(name)) throw ParseError(line_no, col, "sort `" + name + "` declared twice");
      domain.sorts.emplace(std::move(name), std::move(constants));
    } else if (cur.accept("sig ")) {
      std::size_t col = cur.column();
      std::string pred = cur.identifier();
      cur.expect("=");
      cur.expect("(");
      std::vector<std::string> sorts;
      if (!cur.accept(")")) {
        do {
          sorts.push_back(cur.identifier());
        } while (cur.accept(","));
        cur.expect(")");
      }
      if (!cur.at_end()) cur.fail("trailing input");
      if (domain.signatures.count(pred)) throw ParseError(line_no, col, "signature for `" + pred + "` given twice");
      domain.signatures.emplace(std::move(pred), std::move(sorts));
    } else {
      cur.fail("expected `sort` or `sig`");
    }
  });
  return domain;
}

std::string to_text(const Domain& domain) {
  std::ostringstream out;
  for (const auto& [name, constants] : domain.sorts) {
    out << "sort " << name << " = {";
    for (std::size_t i = 0; i < constants.size(); ++i) out << (i ? ", " : "") << format_constant(constants[i]);
    out << "}\n";
  }
  for (const auto& [pred, sorts] : domain.signatures) {
    out << "sig " << pred << " = (";
    for (std::size_t i = 0; i < sorts.size(); ++i) out << (i ? ", " : "") << sorts[i];
    out << ")\n";
  }
  return out.str();
}

std::optional<std::size_t> AtomIndex::find(const GroundAtom& atom) const {
  auto it = lookup_.find(atom);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t AtomIndex::insert(const GroundAtom& atom) {
  auto [it, inserted] = lookup_.emplace(atom, atoms_.size());
  if (!inserted) throw InputError("ground atom indexed twice");
  atoms_.push_back(atom);
  return it->second;
}

std::string format_atom(const Program& program, const GroundAtom& atom) {
  std::string out = program.predicates[atom.predicate].name + "(";
  for (std::size_t i = 0; i < atom.arguments.size(); ++i) {
    out += (i ? ", " : "") + format_constant(atom.arguments[i]);
  }
  return out + ")";
}

Grounding ground(const Program& program, const Domain& domain) {
  auto sort_of = [&](const Predicate& p, std::size_t position) -> const std::string& {
    auto sig = domain.signatures.find(p.name);
    if (sig == domain.signatures.end()) throw InputError("no signature for predicate `" + p.name + "`");
    if (sig->second.size() != p.arity) {
      throw InputError("signature of `" + p.name + "` lists " + std::to_string(sig->second.size()) +
                       " sorts, arity is " + std::to_string(p.arity));
    }
    return sig->second[position];
  };
  auto constants_of = [&](const std::string& sort) -> const std::vector<std::string>& {
    auto it = domain.sorts.find(sort);
    if (it == domain.sorts.end()) throw InputError("unknown sort `" + sort + "`");
    if (it->second.empty()) throw InputError("empty domain for sort `" + sort + "`");
    return it->second;
  };

  Grounding g;

  // Index every ground atom, ordered by predicate name then argument tuple.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < program.predicates.size(); ++i) order.push_back(i);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return program.predicates[a].name < program.predicates[b].name; });
  for (std::size_t pi : order) {
    const auto& p = program.predicates[pi];
    if (p.arity > 0 && !domain.signatures.count(p.name)) continue;
    std::vector<const std::vector<std::string>*> columns;
    for (std::size_t k = 0; k < p.arity; ++k) columns.push_back(&constants_of(sort_of(p, k)));
    std::set<std::vector<std::string>> tuples;
    std::vector<std::size_t> digit(p.arity, 0);
    while (true) {
      std::vector<std::string> args;
      for (std::size_t k = 0; k < p.arity; ++k) args.push_back((*columns[k])[digit[k]]);
      tuples.insert(std::move(args));
      std::size_t k = 0;
      while (k < p.arity && ++digit[k] == columns[k]->size()) digit[k++] = 0;
      if (k == p.arity) break;
    }
    AtomIndex& index = p.kind == PredicateKind::Observed ? g.observed : g.free;
    for (const auto& args : tuples) index.insert({pi, args});
  }

  for (std::size_t ri = 0; ri < program.rules.size(); ++ri) {
    const Rule& rule = program.rules[ri];
    // Resolve each variable's sort from the positions it occupies.
    std::vector<std::string> vars;
    std::map<std::string, std::string> var_sort;
    auto visit = [&](const Literal& lit) {
      const auto& p = program.predicates[lit.predicate];
      for (std::size_t k = 0; k < lit.arguments.size(); ++k) {
        const auto& sort = sort_of(p, k);
        const auto& a = lit.arguments[k];
        if (!a.is_variable) {
          const auto& cs = constants_of(sort);
          if (std::find(cs.begin(), cs.end(), a.text) == cs.end()) {
            throw InputError("rule on line " + std::to_string(rule.line) + ": constant `" + a.text +
                             "` is not in sort `" + sort + "`");
          }
          continue;
        }
        auto [it, inserted] = var_sort.emplace(a.text, sort);
        if (inserted) {
          vars.push_back(a.text);
        } else if (it->second != sort) {
          throw InputError("rule on line " + std::to_string(rule.line) + ": variable `" + a.text +
                           "` used with sorts `" + it->second + "` and `" + sort + "`");
        }
      }
    };
    for (const auto& lit : rule.body) visit(lit);
    for (const auto& lit : rule.head) visit(lit);

    std::vector<const std::vector<std::string>*> columns;
    for (const auto& v : vars) columns.push_back(&constants_of(var_sort[v]));

    auto instantiate = [](const Literal& lit, const std::map<std::string, std::string>& sub) {
      GroundLiteral gl;
      gl.negated = lit.negated;
      gl.atom.predicate = lit.predicate;
      for (const auto& a : lit.arguments) gl.atom.arguments.push_back(a.is_variable ? sub.at(a.text) : a.text);
      return gl;
    };

    std::vector<std::size_t> digit(vars.size(), 0);
    while (true) {
      GroundRule gr;
      gr.rule = ri;
      for (std::size_t k = 0; k < vars.size(); ++k) gr.substitution[vars[k]] = (*columns[k])[digit[k]];
      for (const auto& lit : rule.body) gr.body.push_back(instantiate(lit, gr.substitution));
      for (const auto& lit : rule.head) gr.head.push_back(instantiate(lit, gr.substitution));
      g.rules.push_back(std::move(gr));
      std::size_t k = 0;
      while (k < vars.size() && ++digit[k] == columns[k]->size()) digit[k++] = 0;
      if (k == vars.size()) break;
    }
  }
  return g;
}

LinearPotential to_potential(const Program& program, const GroundRule& ground_rule, const Grounding& grounding) {
  const Rule& rule = program.rules.at(ground_rule.rule);
  LinearPotential p;
  p.weight = rule.weight;
  p.exponent = rule.exponent;

  std::map<std::size_t, double> y_acc, x_acc;
  auto add = [&](const GroundAtom& atom, double c) {
    const bool observed = program.predicates[atom.predicate].kind == PredicateKind::Observed;
    const AtomIndex& index = observed ? grounding.observed : grounding.free;
    auto i = index.find(atom);
    if (!i) throw InputError("ground atom `" + format_atom(program, atom) + "` is not indexed");
    (observed ? x_acc : y_acc)[*i] += c;
  };

  // Body conjunction: sum of truths minus (m - 1). Head disjunction: sum of truths.
  for (const auto& lit : ground_rule.body) {
    if (lit.negated) {
      add(lit.atom, -1.0);
      p.offset += 1.0;
    } else {
      add(lit.atom, 1.0);
    }
  }
  for (const auto& lit : ground_rule.head) {
    if (lit.negated) {
      add(lit.atom, 1.0);
      p.offset -= 1.0;
    } else {
      add(lit.atom, -1.0);
    }
  }
  p.offset -= static_cast<double>(ground_rule.body.size()) - 1.0;

  for (const auto& [i, c] : y_acc) {
    if (c != 0.0) p.y_coeffs.push_back({i, c});
  }
  for (const auto& [i, c] : x_acc) {
    if (c != 0.0) p.x_coeffs.push_back({i, c});
  }
  return p;
}

HlmrfInstance build_instance(const Program& program, const Grounding& grounding) {
  std::vector<LinearPotential> potentials;
  for (const auto& gr : grounding.rules) {
    if (program.rules[gr.rule].weight == 0.0) continue;
    potentials.push_back(to_potential(program, gr, grounding));
  }
  return HlmrfInstance(std::move(potentials), grounding.free.size(), grounding.observed.size());
}

}  // namespace deeppsl
