#include <doctest.h>

#include <set>

#include "flatmu/closure.hpp"
#include "flatmu/network.hpp"

using namespace flatmu;

namespace {

std::shared_ptr<const Connective> chi1() {
  static auto c = make_connective("chi1", 1, parse("[F]x | q1"));
  return c;
}

Atom subset_atom(std::uint64_t mask, std::size_t n) {
  Atom a(n);
  for (std::size_t i = 0; i < n; ++i)
    if ((mask >> i) & 1) a.set(i);
  return a;
}

// Brute-force closure: subformulas, single negations, unfoldings and the two
// box-bottoms, iterated to a fixpoint.
std::set<Formula> closure_oracle(Formula origin) {
  std::set<Formula> s{origin, box(Dir::F, bottom()), box(Dir::B, bottom())};
  for (bool grew = true; grew;) {
    grew = false;
    for (Formula f : std::set<Formula>(s)) {
      std::vector<Formula> add;
      switch (f.kind()) {
        case Kind::Neg:
        case Kind::DiaF:
        case Kind::DiaB: add.push_back(f.child()); break;
        case Kind::Or: add = {f.left(), f.right()}; break;
        case Kind::Sharp: {
          std::map<std::string, Formula> sub{{kRecVar, f}}, sub0{{kRecVar, bottom()}};
          for (std::size_t i = 0; i < f.args().size(); ++i) {
            sub[param_name(i + 1)] = f.args()[i];
            sub0[param_name(i + 1)] = f.args()[i];
          }
          add = {substitute(f.connective().body, sub), substitute(f.connective().body, sub0)};
          break;
        }
        default: break;
      }
      if (f.kind() != Kind::Neg) add.push_back(neg(f));
      for (auto g : add) grew |= s.insert(g).second;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("closure layout and contents") {
  ClosureSet s(var("p"));
  CHECK(s.at(0) == var("p"));
  CHECK(s.at(1) == box(Dir::F, bottom()));
  CHECK(s.at(2) == box(Dir::B, bottom()));
  CHECK(s.index_of(neg(var("p"))));
  CHECK(s.index_of(bottom()));
  CHECK(s.index_of(neg(bottom())));
  CHECK(s.index_of(dia(Dir::F, neg(bottom()))));
  CHECK(s.at(s.bottom_index()) == bottom());
  CHECK(s.at(s.top_index()) == top());
}

TEST_CASE("closure matches the fixpoint oracle") {
  ConnectiveTable t;
  t.add(chi1());
  t.add(make_connective("nab", 2, parse("q1 | nablaB{x, q2}")));
  for (const char* text : {"p", "_|_", "<F>p & [B]~q", "#chi1(q)", "~#chi1(~#chi1(_|_))", "#nab(p, <F>q)"}) {
    Formula f = parse(text, t);
    ClosureSet s(f);
    auto want = closure_oracle(f);
    std::set<Formula> got(s.formulas().begin(), s.formulas().end());
    CAPTURE(text);
    CHECK(got == want);
    CHECK(got.size() == s.size());
    for (std::size_t i : s.bottom_up()) {
      const auto& e = s.entry(i);
      if (e.a >= 0) CHECK(std::find(s.bottom_up().begin(), s.bottom_up().end(), std::size_t(e.a)) <
                          std::find(s.bottom_up().begin(), s.bottom_up().end(), i));
    }
  }
}

TEST_CASE("closure of a fixpoint formula contains both unfoldings") {
  Formula f = sharp(chi1(), {var("q")});
  ClosureSet s(f);
  CHECK(s.index_of(lor(box(Dir::F, f), var("q"))));
  CHECK(s.index_of(lor(box(Dir::F, bottom()), var("q"))));
}

TEST_CASE("atoms agree with the subset filter") {
  for (const char* text : {"p", "p | q", "<F>p", "[F]p & <B>q"}) {
    ClosureSet s(parse(text));
    REQUIRE(s.size() <= 22);
    std::size_t brute = 0;
    for (std::uint64_t m = 0; m < (1ull << s.size()); ++m) brute += is_atom(subset_atom(m, s.size()), s);
    auto atoms = enumerate_atoms(s);
    CAPTURE(text);
    CHECK(atoms.size() == brute);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      CHECK(is_atom(atoms[i], s));
      CHECK_FALSE(atoms[i].test(s.bottom_index()));
      if (i) CHECK(atom_less(atoms[i - 1], atoms[i]));
    }
  }
}

TEST_CASE("atom conditions") {
  ClosureSet s(var("p"));
  const std::size_t p = s.index(var("p")), np = s.index(neg(var("p")));
  CHECK_FALSE(is_atom(s.empty_set(), s));
  Atom only_p = s.empty_set();
  only_p.set(p);
  CHECK_FALSE(is_atom(only_p, s));
  for (const auto& a : enumerate_atoms(s)) {
    CHECK(a.test(p) != a.test(np));
    Atom both = a;
    both.set(p);
    both.set(np);
    CHECK_FALSE(is_atom(both, s));
  }
}

TEST_CASE("atoms respect fixpoint unfolding") {
  Formula f = sharp(chi1(), {var("q")});
  ClosureSet s(f);
  const std::size_t host = s.index(f), unf = s.index(lor(box(Dir::F, f), var("q")));
  for (const auto& a : enumerate_atoms(s)) CHECK(a.test(host) == a.test(unf));
}

TEST_CASE("coherence") {
  ClosureSet s(dia(Dir::F, var("p")));
  auto atoms = enumerate_atoms(s);
  const std::size_t bf = s.box_bottom(Dir::F);
  // brute force: the diamond conditions of both directions
  for (const auto& a : atoms)
    for (const auto& b : atoms) {
      bool want = true;
      for (std::size_t i = 0; i < s.size(); ++i) {
        Formula f = s.at(i);
        if (f.kind() == Kind::DiaF && b.test(s.index(f.child())) && !a.test(i)) want = false;
        if (f.kind() == Kind::DiaB && a.test(s.index(f.child())) && !b.test(i)) want = false;
      }
      CHECK(coherent(a, b, s) == want);
      if (a.test(bf)) CHECK_FALSE(coherent(a, b, s));
    }
  ClosureSet plain(var("p"));
  for (const auto& a : enumerate_atoms(plain))
    for (const auto& b : enumerate_atoms(plain))
      if (!a.test(plain.box_bottom(Dir::F)) && !b.test(plain.box_bottom(Dir::B))) CHECK(coherent(a, b, plain));
}

TEST_CASE("deferral table") {
  CHECK(DeferralTable(ClosureSet(parse("<F>p & [B]q"))).size() == 0);
  Formula f = sharp(chi1(), {var("q")});
  ClosureSet s(f);
  DeferralTable d(s);
  std::set<Formula> bodies;
  for (const auto& e : d.entries()) {
    bodies.insert(e.body);
    CHECK(e.body.mentions(kRecVar));
    CHECK(e.host == s.index(f));
  }
  CHECK(bodies == std::set<Formula>{var("x"), parse("[F]x"), parse("[F]x | q1")});
  CHECK(d.hosted_by(s.index(f)).size() == 3);

  Formula two = land(sharp(chi1(), {var("q")}), sharp(chi1(), {var("p")}));
  ClosureSet s2(two);
  DeferralTable d2(s2);
  auto a = d2.hosted_by(s2.index(sharp(chi1(), {var("q")})));
  auto b = d2.hosted_by(s2.index(sharp(chi1(), {var("p")})));
  CHECK(a.size() == 3);
  CHECK(b.size() == 3);
  for (auto i : a) CHECK(std::find(b.begin(), b.end(), i) == b.end());
}

TEST_CASE("non-disjunctive hosts are rejected") {
  auto c = make_connective("both", 0, parse("<F>x & <B>x"));
  CHECK_THROWS(DeferralTable(ClosureSet(sharp(c, {}))));
}

TEST_CASE("viable atoms witness their diamonds") {
  auto ctx = make_context(parse("<F>p & [F]~p | <B>q"));
  const auto& sigma = ctx->sigma();
  const auto& viable = ctx->viable_atoms();
  CHECK(viable.size() <= ctx->atoms().size());
  for (const auto& a : viable)
    for (Dir d : {Dir::F, Dir::B})
      for (const auto& [dia_i, arg] : sigma.diamonds(d)) {
        if (!a.test(dia_i)) continue;
        bool found = false;
        for (const auto& b : viable)
          found = found || (b.test(arg) && (d == Dir::F ? coherent(a, b, sigma) : coherent(b, a, sigma)));
        CHECK(found);
      }
  CHECK(ctx->preference().size() == viable.size());
}
