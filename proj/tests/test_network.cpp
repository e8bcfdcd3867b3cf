#include <doctest.h>

#include <random>

#include "flatmu/network.hpp"
#include "oracles.hpp"

using namespace flatmu;

namespace {

// First atom containing every formula of `in` and none of `out`.
Atom pick(const ClosureContext& ctx, std::vector<Formula> in, std::vector<Formula> out = {}) {
  for (const auto& a : ctx.atoms()) {
    bool ok = true;
    for (const auto& f : in) ok = ok && a.test(ctx.sigma().index(f));
    for (const auto& f : out) ok = ok && !a.test(ctx.sigma().index(f));
    if (ok) return a;
  }
  FAIL("no such atom");
  return {};
}

// Atom with no diamonds at all: □F⊥, □B⊥ and the given literals.
Atom quiet(const ClosureContext& ctx, std::vector<Formula> in = {}) {
  in.push_back(box(Dir::F, bottom()));
  in.push_back(box(Dir::B, bottom()));
  return pick(ctx, in);
}

Network chain(std::shared_ptr<const ClosureContext> ctx, const Atom& a, std::size_t len) {
  Network n(ctx);
  for (NodeId i = 0; i < len; ++i) n.add_node(i, a);
  for (NodeId i = 0; i + 1 < len; ++i) n.add_edge(i, i + 1);
  return n;
}

bool has_kind(const std::vector<Violation>& v, Violation::Kind k) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
}

std::pair<NodeId, std::size_t> key(NodeId u, std::size_t d) { return {u, d}; }

}  // namespace

TEST_CASE("validate") {
  auto ctx = make_context(parse("<F>p & [F]q"));
  for (const auto& a : ctx->atoms()) {
    Network n(ctx);
    n.add_node(0, a);
    CHECK(validate(n).empty());
  }
  Network n(ctx);
  n.add_node(0, pick(*ctx, {parse("<F>p")}));
  n.mark_saturated(0, Dir::F);
  CHECK(has_kind(validate(n), Violation::Kind::ForwardSaturation));

  Network e(ctx);
  Atom boxq = pick(*ctx, {parse("[F]q")}, {box(Dir::F, bottom())});
  e.add_node(0, boxq);
  e.add_node(1, pick(*ctx, {neg(var("q"))}));
  e.add_edge(0, 1);
  CHECK(has_kind(validate(e), Violation::Kind::Incoherent));

  Network c = chain(ctx, pick(*ctx, {dia(Dir::F, top()), dia(Dir::B, top()), var("q")}), 2);
  c.add_edge(1, 0);
  CHECK(has_kind(validate(c), Violation::Kind::Cycle));
}

TEST_CASE("anticonfluence") {
  auto ctx = make_context(var("p"));
  Atom a = ctx->atoms().front();
  Network tree(ctx);
  for (NodeId i = 0; i < 6; ++i) tree.add_node(i, a);
  tree.add_edge(0, 1);
  tree.add_edge(0, 2);
  tree.add_edge(1, 3);
  tree.add_edge(4, 1);
  tree.add_edge(2, 5);
  CHECK(is_anticonfluent(tree));
  Network diamond(ctx);
  for (NodeId i = 0; i < 4; ++i) diamond.add_node(i, a);
  diamond.add_edge(0, 1);
  diamond.add_edge(0, 2);
  diamond.add_edge(1, 3);
  diamond.add_edge(2, 3);
  CHECK_FALSE(is_anticonfluent(diamond));
  Network shortcut = chain(ctx, a, 3);
  shortcut.add_edge(0, 2);
  CHECK_FALSE(is_anticonfluent(shortcut));
  CHECK(is_anticonfluent(chain(ctx, a, 5)));

  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    Network g = oracle::random_dag(ctx, 2 + i % 6, 0.35, rng);
    CHECK(is_anticonfluent(g) == oracle::at_most_one_path(g));
  }
}

TEST_CASE("subnetworks") {
  auto ctx = make_context(parse("<F>p"));
  Atom q = quiet(*ctx);
  Atom d = pick(*ctx, {parse("<F>p")}, {box(Dir::B, bottom())});
  Network n(ctx);
  n.add_node(0, q);
  n.mark_saturated(0, Dir::F);
  CHECK(is_subnetwork(n, n));
  Network bigger = n;
  bigger.add_node(1, d);
  CHECK(is_subnetwork(n, bigger));
  Network wrong = bigger;
  Atom top_p = pick(*ctx, {var("p"), box(Dir::F, bottom())}, {box(Dir::B, bottom())});
  wrong.add_node(2, top_p);
  wrong.add_edge(0, 2);
  CHECK_FALSE(is_subnetwork(n, wrong));
  CHECK(is_contained(n, wrong));
}

TEST_CASE("union, restrict and generated sets") {
  auto ctx = make_context(var("p"));
  Atom a = ctx->atoms().front();
  Network c = chain(ctx, a, 3);
  CHECK(network_union({c}) == c);
  Network other(ctx);
  other.add_node(10, a);
  other.add_node(11, a);
  other.add_edge(10, 11);
  Network sum = network_union({c, other});
  CHECK(sum.size() == 5);
  CHECK(sum.edge_count() == 3);
  CHECK(downgen(c, {2}) == NodeSet{0, 1, 2});
  CHECK(upgen(c, {2}) == NodeSet{2});
  CHECK(upgen(c, {0}) == NodeSet{0, 1, 2});
  CHECK(restrict(c, {0, 2}).edge_count() == 0);
  CHECK(complement(c, {1}).size() == 2);
  CHECK(equp(c, c, NodeId{1}));
  CHECK(eqdown(c, c, NodeId{1}));
  Network clash(ctx);
  clash.add_node(0, ctx->atoms().back());
  if (ctx->atoms().back() != a) CHECK_THROWS(network_union({c, clash}));
}

TEST_CASE("overlapping unions stay networks") {
  auto ctx = make_context(parse("(<F>p | <B>~p) & [F]q"));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    Network n = oracle::random_forest(ctx, 8, rng);
    NodeId next = n.next_id();
    Network a = oracle::grow(n, n.nodes(), Dir::F, 3, rng, next);
    Network b = oracle::grow(n, n.nodes(), Dir::B, 3, rng, next);
    Network u = network_union({a, b});
    CHECK(validate(u).empty());
    CHECK(oracle::same(u, oracle::union_def({a, b})));
  }
}

TEST_CASE("amalgamation") {
  auto ctx = make_context(var("p"));
  Atom a = ctx->atoms().front();
  Network base = chain(ctx, a, 2);
  Network one = base;
  one.add_node(5, a);
  one.add_edge(1, 5);
  CHECK(amalgamate(base, {{1, one}}) == one);

  Network path(ctx);
  path.add_node(0, a);
  path.add_node(1, a);
  path.add_node(2, a);
  path.add_edge(1, 0);
  path.add_edge(1, 2);
  Network e1 = path, e2 = path;
  e1.add_node(10, a);
  e1.add_edge(0, 10);
  e1.add_node(11, a);
  e1.add_edge(10, 11);
  e2.add_node(20, a);
  e2.add_edge(2, 20);
  Network r = amalgamate(path, {{0, e1}, {2, e2}});
  CHECK(validate(r).empty());
  CHECK(is_anticonfluent(r));
  CHECK(r.size() == 6);

  Network overlap = base;
  overlap.add_node(7, a);
  overlap.add_edge(1, 7);
  CHECK_THROWS_AS(amalgamate(base, {{0, one}, {1, overlap}}), AmalgamationError);
}

TEST_CASE("timeouts") {
  ConnectiveTable t;
  t.add(make_connective("reach", 1, parse("q1 | <F>x")));
  t.add(make_connective("nab", 1, parse("q1 | nablaF{x}")));
  auto ctx = make_context(parse("#reach(p) & #nab(p)", t));
  const auto& sigma = ctx->sigma();
  const Formula reach = parse("#reach(p)", t);
  const std::size_t host = sigma.index(reach);
  std::size_t focus = 0;
  for (auto i : ctx->deferrals().hosted_by(host))
    if (ctx->deferrals().at(i).kind == ViewNode::Kind::X) focus = i;

  // ♯ and its ⊥-unfolding in the label: the focus is finished at once
  Network n(ctx);
  n.add_node(0, pick(*ctx, {reach, var("p")}));
  auto to = compute_timeouts(n);
  REQUIRE(to.count(key(0, focus)));
  CHECK(to.at(key(0, focus)) == std::optional<std::size_t>(0));
  CHECK(to == oracle::timeouts_def(n));

  // an unsaturated node cannot finish a modal deferral
  Network m(ctx);
  m.add_node(0, pick(*ctx, {reach, neg(var("p"))}, {box(Dir::F, bottom())}));
  auto tm = compute_timeouts(m);
  CHECK_FALSE(tm.at(key(0, focus)));
  CHECK(tm == oracle::timeouts_def(m));
  auto defects = find_defects(m);
  CHECK(std::count_if(defects.begin(), defects.end(), [](const Defect& d) { return d.kind == Defect::Kind::Mu; }) >= 1);

  // μ-defects are exactly the unfinished entries
  std::mt19937_64 rng(3);
  for (int i = 0; i < 40; ++i) {
    Network r = oracle::random_forest(ctx, 7, rng);
    auto tr = compute_timeouts(r);
    CHECK(tr == oracle::timeouts_def(r));
    std::size_t unfinished = 0, mu = 0;
    for (const auto& [k, v] : tr) unfinished += !v;
    for (const auto& d : find_defects(r, tr)) mu += d.kind == Defect::Kind::Mu;
    CHECK(mu == unfinished);
  }
}

TEST_CASE("defects of a fresh node") {
  auto ctx = make_context(parse("<F>p & <B>q"));
  Network n(ctx);
  n.add_node(0, pick(*ctx, {parse("<F>p"), parse("<B>q")}));
  auto d = find_defects(n);
  REQUIRE(d.size() == 2);
  CHECK(d[0].kind == Defect::Kind::DiaF);
  CHECK(d[1].kind == Defect::Kind::DiaB);
}
