#include <doctest.h>

#include <random>

#include "flatmu/semantics.hpp"
#include "oracles.hpp"

using namespace flatmu;

namespace {

ConnectiveTable table() {
  ConnectiveTable t;
  t.add(make_connective("reach", 1, parse("q1 | <F>x")));
  t.add(make_connective("chi1", 1, parse("[F]x | q1")));
  t.add(make_connective("chi2", 1, parse("[B]x | q1")));
  t.add(make_connective("back", 2, parse("q1 | nablaB{x, q2}")));
  return t;
}

std::vector<std::size_t> states(const TruthSet& s) {
  std::vector<std::size_t> out;
  for (auto i = s.find_first(); i != TruthSet::npos; i = s.find_next(i)) out.push_back(i);
  return out;
}

bool agrees(const TruthSet& got, const oracle::States& want) {
  for (std::size_t i = 0; i < want.size(); ++i)
    if (got.test(i) != bool(want[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("eval basics") {
  KripkeModel m(Frame(2));
  m.frame.add_edge(0, 1);
  m.set("p", 1);
  auto t = table();
  CHECK(eval(bottom(), m).none());
  CHECK(states(eval(parse("<F>p"), m)) == std::vector<std::size_t>{0});
  CHECK(states(eval(parse("<B>~p"), m)) == std::vector<std::size_t>{1});
  CHECK(states(eval(parse("[F]_|_"), m)) == std::vector<std::size_t>{1});
  CHECK(states(eval(parse("#reach(p)", t), m)) == std::vector<std::size_t>{0, 1});
  CHECK(states(eval(parse("#reach(~p)", t), m)) == std::vector<std::size_t>{0});
  CHECK(eval(var("unmentioned"), m).none());
}

TEST_CASE("eval agrees with the prefixpoint oracle on small models") {
  auto t = table();
  std::vector<Formula> fs;
  for (const char* s : {"#reach(p)", "#chi1(q)", "#chi2(p & q)", "~#chi1(~#chi2(_|_))", "#back(p, <F>q)",
                        "nablaF{p, q} | nablaB{~p}", "#reach(#chi2(p))"})
    fs.push_back(parse(s, t));
  std::size_t models = 0;
  for (std::size_t n = 1; n <= 3; ++n)
    oracle::for_each_model(n, {"p", "q"}, [&](const Frame& f, const LaneValuation& lv) {
      for (std::size_t lane = 0; lane < lv.lanes; lane += 7) {
        auto sm = oracle::lane_model(f, lv, lane);
        KripkeModel m(f);
        for (const auto& [v, set] : sm.val)
          for (std::size_t s = 0; s < n; ++s)
            if (set[s]) m.set(v, s);
        auto got = eval_all(fs, m);
        for (std::size_t i = 0; i < fs.size(); ++i) CHECK(agrees(got[i], oracle::naive_eval(fs[i], sm)));
        ++models;
      }
    });
  CHECK(models > 1000);
}

TEST_CASE("bit-sliced lanes agree with single evaluation") {
  auto t = table();
  std::vector<Formula> fs = {parse("#reach(p) & <B>q", t), parse("[F]#chi2(q)", t)};
  Program prog(fs);
  Evaluator ev(prog);
  std::size_t checked = 0;
  oracle::for_each_model(3, {"p", "q"}, [&](const Frame& f, const LaneValuation& lv) {
    if (checked > 3000) return;
    ev.run(f, lv);
    for (std::size_t lane = 0; lane < lv.lanes; lane += 5) {
      KripkeModel m(f);
      for (const auto& [v, words] : lv.words)
        for (std::size_t s = 0; s < f.size(); ++s)
          if ((words[s] >> lane) & 1) m.set(v, s);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        auto one = eval(fs[i], m);
        for (std::size_t s = 0; s < f.size(); ++s) CHECK(one.test(s) == bool((ev.result(i)[s] >> lane) & 1));
      }
      ++checked;
    }
  });
}

TEST_CASE("nabla via the full relation") {
  KripkeModel lone(Frame(1));
  CHECK(eval_nabla_via_relation({}, Dir::F, lone, 0));
  CHECK_FALSE(eval_nabla_via_relation({top()}, Dir::F, lone, 0));
  KripkeModel m(Frame(3));
  m.frame.add_edge(0, 1);
  m.frame.add_edge(0, 2);
  m.set("p", 1);
  CHECK(eval_nabla_via_relation({top()}, Dir::F, m, 0));
  CHECK_FALSE(eval_nabla_via_relation({var("p")}, Dir::F, m, 0));
  CHECK(eval_nabla_via_relation({var("p"), top()}, Dir::F, m, 0));
  CHECK(eval_nabla_via_relation({var("p"), neg(var("p"))}, Dir::F, m, 0));
  CHECK(eval_nabla_via_relation({neg(var("p"))}, Dir::B, m, 2));
  CHECK_FALSE(eval_nabla_via_relation({var("p")}, Dir::B, m, 2));
}

TEST_CASE("approximants") {
  auto t = table();
  const Connective& reach = *t.find("reach");
  CHECK(approximant(reach, 0, {var("p")}) == parse("p | <F>_|_"));
  CHECK(approximant(reach, 1, {var("p")}) == parse("p | <F>(p | <F>_|_)"));
}

TEST_CASE("axiom instances") {
  auto has = [](const std::vector<Formula>& v, const Formula& f) { return std::find(v.begin(), v.end(), f) != v.end(); };
  auto empty = axiom_instances({});
  CHECK(empty.size() == 2);
  CHECK(has(empty, parse("~<F>_|_")));
  CHECK(has(empty, parse("~<B>_|_")));
  CHECK(has(axiom_instances({var("p")}), parse("p -> [F]<B>p")));
  CHECK(has(axiom_instances({var("p")}), parse("p -> [B]<F>p")));
  CHECK(has(axiom_instances({var("p"), var("q")}), parse("<F>(p | q) <-> (<F>p | <F>q)")));
}

TEST_CASE("brute-force satisfiability") {
  for (std::size_t n = 1; n <= 3; ++n) CHECK_FALSE(brute_force_sat(bottom(), n));
  auto w = brute_force_sat(parse("<F>p"), 3);
  REQUIRE(w);
  // loops are allowed, so the least witness is a single reflexive state
  CHECK(w->model.size() == 1);
  CHECK(w->model.frame.has_edge(0, 0));
  CHECK(eval(parse("<F>p"), w->model).test(w->state));
  auto v = brute_force_sat(parse("<F><F>p & [F][F]~p"), 3);
  CHECK_FALSE(v);
}

TEST_CASE("canonical masks pick one frame per isomorphism class") {
  // digraphs with loops: 10 classes on 2 nodes, 104 on 3
  std::size_t count = 0;
  for (std::uint64_t m = 0; m < (1u << 9); ++m) count += canonical_mask(3, m);
  CHECK(count == 104);
  std::size_t two = 0;
  for (std::uint64_t m = 0; m < 16; ++m) two += canonical_mask(2, m);
  CHECK(two == 10);
}
