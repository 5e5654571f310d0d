/*
 * restriction.cpp
 *
 * This source file is part of the otto project.
 *
 * Copyright 2026 the otto authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "otto/restriction.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <vector>

namespace otto {

// Expression tree over knob values.  Comparisons and logic operators yield
// 1.0 / 0.0 so the whole tree evaluates through a single double-valued
// recursion; the root is interpreted as "truthy != 0".
struct Restriction::Node {
  enum class Op {
    constant, knob,
    add, sub, mul, div, neg,
    lt, le, gt, ge, eq, ne,
    land, lor
  };
  Op op;
  double value = 0;        // constant
  std::size_t knob = 0;    // knob index
  std::unique_ptr<Node> lhs, rhs;

  double eval(const KnobConfig& c) const {
    switch (op) {
      case Op::constant: return value;
      case Op::knob: return c.values[knob];
      case Op::add: return lhs->eval(c) + rhs->eval(c);
      case Op::sub: return lhs->eval(c) - rhs->eval(c);
      case Op::mul: return lhs->eval(c) * rhs->eval(c);
      case Op::div: return lhs->eval(c) / rhs->eval(c);
      case Op::neg: return -lhs->eval(c);
      case Op::lt: return lhs->eval(c) < rhs->eval(c) ? 1.0 : 0.0;
      case Op::le: return lhs->eval(c) <= rhs->eval(c) ? 1.0 : 0.0;
      case Op::gt: return lhs->eval(c) > rhs->eval(c) ? 1.0 : 0.0;
      case Op::ge: return lhs->eval(c) >= rhs->eval(c) ? 1.0 : 0.0;
      case Op::eq: return lhs->eval(c) == rhs->eval(c) ? 1.0 : 0.0;
      case Op::ne: return lhs->eval(c) != rhs->eval(c) ? 1.0 : 0.0;
      case Op::land: return (lhs->eval(c) != 0.0 && rhs->eval(c) != 0.0) ? 1.0 : 0.0;
      case Op::lor: return (lhs->eval(c) != 0.0 || rhs->eval(c) != 0.0) ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

namespace {

using Node = Restriction::Node;
using Op = Restriction::Node::Op;

std::unique_ptr<Node> make(Op op, std::unique_ptr<Node> l, std::unique_ptr<Node> r = nullptr) {
  auto n = std::make_unique<Node>();
  n->op = op;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

struct Parser {
  const std::string& text;
  const std::vector<KnobDomain>& knobs;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("restriction: " + msg + " at offset " + std::to_string(pos) + " in '" + text + "'");
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(const char* tok) {
    skip_ws();
    const std::size_t len = std::char_traits<char>::length(tok);
    if (text.compare(pos, len, tok) != 0) return false;
    // Don't let '<' swallow the first half of '<=' (same for '>', '=', '!').
    if (len == 1 && (tok[0] == '<' || tok[0] == '>') && pos + 1 < text.size() &&
        text[pos + 1] == '=')
      return false;
    pos += len;
    return true;
  }

  std::unique_ptr<Node> parse() {
    auto n = parse_or();
    skip_ws();
    if (pos != text.size()) fail("unexpected trailing input");
    return n;
  }

  std::unique_ptr<Node> parse_or() {
    auto n = parse_and();
    while (eat("||")) n = make(Op::lor, std::move(n), parse_and());
    return n;
  }

  std::unique_ptr<Node> parse_and() {
    auto n = parse_cmp();
    while (eat("&&")) n = make(Op::land, std::move(n), parse_cmp());
    return n;
  }

  std::unique_ptr<Node> parse_cmp() {
    auto n = parse_add();
    if (eat("<=")) return make(Op::le, std::move(n), parse_add());
    if (eat(">=")) return make(Op::ge, std::move(n), parse_add());
    if (eat("==")) return make(Op::eq, std::move(n), parse_add());
    if (eat("!=")) return make(Op::ne, std::move(n), parse_add());
    if (eat("<")) return make(Op::lt, std::move(n), parse_add());
    if (eat(">")) return make(Op::gt, std::move(n), parse_add());
    return n;
  }

  std::unique_ptr<Node> parse_add() {
    auto n = parse_mul();
    for (;;) {
      if (eat("+"))
        n = make(Op::add, std::move(n), parse_mul());
      else if (eat("-"))
        n = make(Op::sub, std::move(n), parse_mul());
      else
        return n;
    }
  }

  std::unique_ptr<Node> parse_mul() {
    auto n = parse_unary();
    for (;;) {
      if (eat("*"))
        n = make(Op::mul, std::move(n), parse_unary());
      else if (eat("/"))
        n = make(Op::div, std::move(n), parse_unary());
      else
        return n;
    }
  }

  std::unique_ptr<Node> parse_unary() {
    if (eat("-")) return make(Op::neg, parse_unary());
    return parse_primary();
  }

  std::unique_ptr<Node> parse_primary() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of expression");
    const char c = text[pos];
    if (c == '(') {
      ++pos;
      auto n = parse_or();
      skip_ws();
      if (pos >= text.size() || text[pos] != ')') fail("expected ')'");
      ++pos;
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* start = text.c_str() + pos;
      char* end = nullptr;
      const double v = std::strtod(start, &end);
      if (end == start) fail("malformed number");
      pos += static_cast<std::size_t>(end - start);
      auto n = std::make_unique<Node>();
      n->op = Op::constant;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos;
      while (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) ||
                                   text[end] == '_'))
        ++end;
      const std::string name = text.substr(pos, end - pos);
      for (std::size_t i = 0; i < knobs.size(); ++i) {
        if (knobs[i].name == name) {
          pos = end;
          auto n = std::make_unique<Node>();
          n->op = Op::knob;
          n->knob = i;
          return n;
        }
      }
      fail("unknown knob '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

Restriction Restriction::compile(const std::string& text, const std::vector<KnobDomain>& knobs) {
  Restriction r;
  r.text_ = text;
  bool blank = true;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
  if (blank) return r;  // always true
  Parser p{text, knobs};
  r.root_ = std::shared_ptr<const Node>(p.parse().release());
  return r;
}

bool Restriction::evaluate(const KnobConfig& config) const {
  if (!root_) return true;
  return root_->eval(config) != 0.0;
}

}  // namespace otto
