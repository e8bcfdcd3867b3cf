#include <doctest.h>

#include "flatmu/syntax.hpp"

using namespace flatmu;

namespace {

ConnectiveTable table_of(std::initializer_list<std::pair<const char*, const char*>> defs) {
  ConnectiveTable t;
  for (const auto& [name, body] : defs) {
    Formula b = parse(body);
    std::size_t arity = 0;
    for (const auto& v : b.variables())
      if (v != kRecVar) ++arity;
    t.add(make_connective(name, arity, b));
  }
  return t;
}

SyntaxError::Code error_code(const char* text, const ConnectiveTable& t = {}) {
  try {
    parse(text, t);
  } catch (const SyntaxError& e) {
    return e.code();
  }
  FAIL("no error for " << text);
  return SyntaxError::Code::Syntax;
}

}  // namespace

TEST_CASE("parse builds primitive trees") {
  Formula f = parse("p | <F>q");
  CHECK(f == lor(var("p"), dia(Dir::F, var("q"))));
  CHECK(parse("nablaF{}") == neg(dia(Dir::F, neg(bottom()))));
  CHECK(parse("nablaB{}") == box(Dir::B, bottom()));
  CHECK(parse("[F]p") == neg(dia(Dir::F, neg(var("p")))));
  CHECK(parse("p & q") == neg(lor(neg(var("p")), neg(var("q")))));
  CHECK(parse("nablaF{p, q}") == land(land(dia(Dir::F, var("p")), dia(Dir::F, var("q"))), box(Dir::F, lor(var("p"), var("q")))));
  CHECK(parse("p -> q") == implies(var("p"), var("q")));
  CHECK(parse("p -> q -> r") == implies(var("p"), implies(var("q"), var("r"))));
  CHECK(parse("(p)") == var("p"));
}

TEST_CASE("printing round-trips") {
  auto t = table_of({{"reach", "q1 | <F>x"}, {"two", "q1 & [B](x | q2)"}});
  for (const char* s : {"p", "~p", "_|_", "<F><B>p", "[F](p | q) & <B>~r", "#reach(p & q)", "#two(<F>p, #reach(q))",
                        "nablaF{p, ~q}", "nablaB{}", "p <-> q"}) {
    Formula f = parse(s, t);
    CAPTURE(s);
    CHECK(parse(print(f), t) == f);
  }
}

TEST_CASE("parse errors carry a code and position") {
  CHECK(error_code("~<F>~#0") == SyntaxError::Code::UnknownConnective);
  auto t = table_of({{"reach", "q1 | <F>x"}});
  CHECK(error_code("#reach(p, q)", t) == SyntaxError::Code::ArityMismatch);
  CHECK(error_code("#reach", t) == SyntaxError::Code::ArityMismatch);
  CHECK(error_code("p |") == SyntaxError::Code::Syntax);
  CHECK(error_code("(p") == SyntaxError::Code::Syntax);
  CHECK(error_code("P") == SyntaxError::Code::Syntax);
  try {
    parse("p & & q");
    FAIL("accepted");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("positivity") {
  CHECK(is_positive_in(parse("~~x"), "x"));
  CHECK_FALSE(is_positive_in(parse("~x | q"), "x"));
  CHECK(is_positive_in(parse("<F>~~x"), "x"));
  CHECK(is_positive_in(parse("[F]x"), "x"));
  CHECK_FALSE(is_positive_in(parse("x -> q"), "x"));
  CHECK(is_positive_in(parse("q -> x"), "x"));
  CHECK_THROWS(make_connective("bad", 1, parse("~x | q1")));
  CHECK_THROWS(make_connective("bad", 1, parse("x | q2")));
}

TEST_CASE("guardedness") {
  CHECK(make_connective("a", 1, parse("q1 | <F>x"))->guarded);
  CHECK_FALSE(make_connective("b", 0, parse("x"))->guarded);
  CHECK_FALSE(make_connective("c", 1, parse("(x & q1) | <F>x"))->guarded);
  CHECK(make_connective("d", 1, parse("[B]x & q1"))->guarded);
}

TEST_CASE("disjunctive classification") {
  CHECK(make_connective("chi1", 1, parse("[F]x | q1"))->disjunctive == Disjunctive::Forward);
  CHECK(make_connective("chi2", 1, parse("[B]x | q1"))->disjunctive == Disjunctive::Backward);
  CHECK(make_connective("both", 0, parse("<F>x & <B>x"))->disjunctive == Disjunctive::None);
  CHECK(make_connective("conj", 0, parse("<F>x & <F><F>x"))->disjunctive == Disjunctive::None);
  CHECK(make_connective("nab", 2, parse("q1 | nablaF{x, q2}"))->disjunctive == Disjunctive::Forward);
  CHECK(make_connective("guard", 1, parse("q1 & <B>x"))->disjunctive == Disjunctive::Backward);
  // x-free connectives sit in both grammars; they are read forwards
  CHECK(make_connective("flat", 1, parse("q1 | <B>q1"))->disjunctive == Disjunctive::Forward);
}

TEST_CASE("guardify base cases") {
  auto g = guardify(*make_connective("a", 1, parse("q1 | <F>x")));
  CHECK(print(g.gamma1) == "_|_ | _|_");
  CHECK(g.gamma2->body == parse("q1 | <F>x"));
  auto h = guardify(*make_connective("b", 0, parse("x")));
  CHECK(h.gamma1 == top());
  CHECK(h.gamma2->body == bottom());
  auto k = guardify(*make_connective("c", 0, parse("x | nablaF{x}")));
  CHECK(k.gamma1 == lor(top(), bottom()));
  CHECK(k.gamma2->body == lor(bottom(), parse("nablaF{x}")));
  CHECK(k.gamma2->guarded);
  CHECK(k.gamma2->disjunctive == Disjunctive::Forward);
}

TEST_CASE("translate_guarded") {
  auto t = table_of({{"u", "q1 | x"}, {"g", "q1 | <F>x"}});
  Formula boolean = parse("p & ~q | r");
  Formula f = parse("<F>#u(q)", t);
  auto map = guard_map_for(parse("#u(#u(q)) & #g(p)", t));
  CHECK(translate_guarded(boolean, map) == boolean);
  auto gu = map.at(t.find("u").get());
  CHECK(gu->guarded);
  CHECK(map.at(t.find("g").get()) == t.find("g"));
  CHECK(translate_guarded(f, map) == dia(Dir::F, sharp(gu, {var("q")})));
  CHECK(translate_guarded(parse("#u(#u(q))", t), map) == sharp(gu, {sharp(gu, {var("q")})}));
}

TEST_CASE("connective files") {
  auto t = load_connectives_json(R"([{"name": "reach", "arity": 1, "body": "q1 | <F>x"},
                                     {"name": "chi1", "arity": 1, "body": "[F]x | q1"}])");
  REQUIRE(t.find("reach"));
  CHECK(t.find("chi1")->disjunctive == Disjunctive::Forward);
  auto w = load_connectives_json(R"({"connectives": [{"name": "k", "arity": 0, "body": "<B>x"}]})");
  CHECK(w.find("k"));
  CHECK_THROWS(load_connectives_json(R"([{"name": "bad", "arity": 1, "body": "~x"}])"));
}

TEST_CASE("substitution and depth") {
  Formula f = parse("<F>(p | [B]q)");
  CHECK(substitute(f, {{"p", parse("r")}}) == parse("<F>(r | [B]q)"));
  CHECK(modal_depth(f) == 2);
  CHECK(modal_depth(parse("p & ~q")) == 0);
  CHECK(complement(parse("~p")) == var("p"));
  CHECK(complement(var("p")) == neg(var("p")));
}
