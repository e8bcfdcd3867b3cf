#include <doctest.h>

#include "flatmu/construct.hpp"
#include "oracles.hpp"

using namespace flatmu;

namespace {

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

Network single(std::shared_ptr<const ClosureContext> ctx, const Atom& a) {
  Network n(ctx);
  n.add_node(0, a);
  return n;
}

ConnectiveTable table() {
  ConnectiveTable t;
  t.add(make_connective("reach", 1, parse("q1 | <F>x")));
  t.add(make_connective("chi1", 1, parse("[F]x | q1")));
  t.add(make_connective("chi2", 1, parse("[B]x | q1")));
  return t;
}

std::size_t focus_of(const ClosureContext& ctx, const Formula& host) {
  for (auto i : ctx.deferrals().hosted_by(ctx.sigma().index(host)))
    if (ctx.deferrals().at(i).kind == ViewNode::Kind::X) return i;
  FAIL("no focus");
  return 0;
}

}  // namespace

TEST_CASE("saturation without diamonds only marks the node") {
  auto ctx = make_context(parse("p & [F]q"));
  Atom a = pick(*ctx, {var("p"), parse("[F]q"), box(Dir::F, bottom()), box(Dir::B, bottom())});
  Network n = saturate_forward(single(ctx, a), 0);
  CHECK(n.size() == 1);
  CHECK(n.is_saturated(0, Dir::F));
  Network m = saturate_backward(single(ctx, a), 0);
  CHECK(m.size() == 1);
  CHECK(m.is_saturated(0, Dir::B));
}

TEST_CASE("saturation attaches d copies per diamond") {
  auto t = table();
  // three deferrals from one chi1 host, so three copies
  Formula f = parse("<F>p & #chi1(q)", t);
  auto ctx = make_context(f);
  REQUIRE(ctx->copies() == 3);
  Atom a = pick(*ctx, {f});
  Network n = saturate_forward(single(ctx, a), 0);
  CHECK(validate(n).empty());
  std::vector<NodeId> heads(n.successors(0).begin(), n.successors(0).end());
  std::size_t with_p = 0;
  for (auto v : heads) with_p += n.label(v).test(ctx->sigma().index(var("p")));
  CHECK(with_p >= 3);
  CHECK(heads.size() % 3 == 0);
  for (std::size_t i = 0; i + 3 <= heads.size(); i += 3) {
    CHECK(n.label(heads[i]) == n.label(heads[i + 1]));
    CHECK(n.label(heads[i]) == n.label(heads[i + 2]));
  }

  Formula g = parse("<B>p & #chi1(q)", t);
  auto bctx = make_context(g);
  Atom b = pick(*bctx, {g});
  Network m = saturate_backward(single(bctx, b), 0);
  CHECK(validate(m).empty());
  CHECK(m.predecessors(0).size() >= 3);
  for (auto v : m.predecessors(0)) CHECK(coherent(m.label(v), m.label(0), bctx->sigma()));
}

TEST_CASE("normalize_heads saturates interior nodes only") {
  auto ctx = make_context(parse("<F>p | [F]~p"));
  Atom d = pick(*ctx, {parse("<F>p")}, {box(Dir::B, bottom())});
  Atom end = pick(*ctx, {var("p")}, {parse("<F>p")});
  Network n(ctx);
  n.add_node(0, d);
  n.add_node(1, d);
  n.add_node(2, end);
  n.add_edge(0, 1);
  n.add_edge(1, 2);
  Network r = normalize_heads(n, Dir::F);
  CHECK(validate(r).empty());
  CHECK(r.is_saturated(0, Dir::F));
  CHECK_FALSE(r.is_saturated(2, Dir::F));
  CHECK(is_subnetwork(n, r));
  CHECK(normalize_heads(r, Dir::F) == r);
  for (const auto& x : find_defects(r))
    if (x.kind == Defect::Kind::DiaF) CHECK(r.successors(x.node).empty());
}

TEST_CASE("finishing a reachability focus") {
  auto t = table();
  Formula reach = parse("#reach(p)", t);
  auto ctx = make_context(reach);
  const std::size_t focus = focus_of(*ctx, reach);

  Network done = single(ctx, pick(*ctx, {reach, var("p")}));
  CHECK(finish_deferral(done, 0, focus) == done);

  Network n = single(ctx, pick(*ctx, {reach, neg(var("p"))}));
  Network r = finish_deferral(n, 0, focus);
  CHECK(validate(r).empty());
  CHECK(is_subnetwork(n, r));
  auto to = compute_timeouts(r);
  REQUIRE(to.at({0, focus}));
  bool found_p = false;
  for (auto v : r.successors(0)) found_p = found_p || r.label(v).test(ctx->sigma().index(var("p")));
  CHECK(found_p);
}

TEST_CASE("repair_all") {
  auto ctx = make_context(parse("<F>p & <B>q"));
  Atom quiet = pick(*ctx, {box(Dir::F, bottom()), box(Dir::B, bottom())});
  Network perfect = single(ctx, quiet);
  perfect.mark_saturated(0, Dir::F);
  perfect.mark_saturated(0, Dir::B);
  CHECK(repair_all(perfect) == perfect);

  Network n = single(ctx, pick(*ctx, {parse("<F>p & <B>q")}));
  Network r = repair_all(n);
  CHECK(validate(r).empty());
  CHECK(is_subnetwork(n, r));
  CHECK(r.is_saturated(0, Dir::F));
  CHECK(r.is_saturated(0, Dir::B));
  for (const auto& d : find_defects(r)) CHECK(d.node != 0);
}

TEST_CASE("build: trivially saturable atom") {
  auto ctx = make_context(parse("p & ~q"));
  Atom a = pick(*ctx, {parse("p & ~q"), box(Dir::F, bottom()), box(Dir::B, bottom())});
  auto rep = build(ctx, a);
  CHECK(rep.verdict == ConstructionReport::Verdict::Perfect);
  CHECK(rep.rounds_completed == 1);
  CHECK(rep.network.size() == 1);
  KripkeModel m = extract_model(rep.network);
  CHECK(m.size() == 1);
  CHECK(m.frame.edges().empty());
  CHECK(truth_lemma_failures(rep.network).empty());
}

TEST_CASE("build: reachability with ~p at the root") {
  auto t = table();
  Formula f = parse("#reach(p) & ~p", t);
  auto ctx = make_context(f);
  bool good = false;
  for (const auto& a : ctx->atoms()) {
    if (!a.test(ctx->sigma().index(f))) continue;
    auto rep = build(ctx, a);
    CHECK(validate(rep.network).empty());
    if (rep.verdict == ConstructionReport::Verdict::Perfect) {
      good = true;
      CHECK(truth_lemma_failures(rep.network).empty());
    } else if (rep.verdict == ConstructionReport::Verdict::PerfectUpToRadius && rep.radius >= 1) {
      good = true;
      CHECK(truth_lemma_failures(rep.network, rep.radius).empty());
    }
  }
  CHECK(good);
}

TEST_CASE("build: the formula without finite models is never perfect") {
  auto t = table();
  Formula f = parse("~#chi1(~#chi2(_|_))", t);
  auto ctx = make_context(f);
  std::size_t tried = 0;
  for (const auto& a : ctx->atoms()) {
    if (!a.test(ctx->sigma().index(f)) || tried == 4) continue;
    ++tried;
    auto rep = build(ctx, a, Budget{120, 4, 5});
    CHECK(rep.verdict != ConstructionReport::Verdict::Perfect);
    CHECK(validate(rep.network).empty());
    for (std::size_t i = 1; i < rep.radius_history.size(); ++i)
      CHECK(rep.radius_history[i] >= rep.radius_history[i - 1]);
    for (std::size_t i = 1; i < rep.snapshots.size(); ++i) CHECK(is_subnetwork(rep.snapshots[i - 1], rep.snapshots[i]));
  }
  CHECK(tried > 0);
}

TEST_CASE("truth lemma on perfect networks") {
  auto t = table();
  std::size_t perfect = 0;
  for (const char* s : {"<F>p & [F]q", "<B>p & <F>~p", "#chi1(p)", "<F>(p & <B>q)"}) {
    Formula f = parse(s, t);
    auto ctx = make_context(f);
    for (const auto& a : ctx->atoms()) {
      if (!a.test(ctx->sigma().index(f))) continue;
      auto rep = build(ctx, a);
      if (rep.verdict != ConstructionReport::Verdict::Perfect) continue;
      ++perfect;
      CHECK(find_defects(rep.network).empty());
      CHECK(truth_lemma_failures(rep.network).empty());
      auto sm = oracle::from_kripke(extract_model(rep.network));
      std::size_t state = 0;
      for (const auto& [u, label] : rep.network.labels()) {
        for (auto i = label.find_first(); i != Atom::npos; i = label.find_next(i))
          CHECK(oracle::naive_eval(ctx->sigma().at(i), sm)[state]);
        ++state;
      }
    }
  }
  CHECK(perfect >= 5);
}

TEST_CASE("builds are deterministic") {
  auto t = table();
  Formula f = parse("<F>p & #reach(q)", t);
  auto ctx = make_context(f);
  for (const auto& a : ctx->atoms()) {
    if (!a.test(ctx->sigma().index(f))) continue;
    auto x = build(ctx, a), y = build(ctx, a);
    CHECK(x.network == y.network);
    CHECK(x.verdict == y.verdict);
    CHECK(x.repairs.size() == y.repairs.size());
  }
}
