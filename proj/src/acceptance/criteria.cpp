#include "criteria.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "flatmu/construct.hpp"
#include "flatmu/semantics.hpp"
#include "flatmu/syntax.hpp"
#include "oracles.hpp"

namespace flatmu::acceptance {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ConnectiveTable standard_table() {
  ConnectiveTable t;
  t.add(make_connective("reach", 1, parse("q1 | <F>x")));
  t.add(make_connective("reachb", 1, parse("q1 | <B>x")));
  t.add(make_connective("chi1", 1, parse("[F]x | q1")));
  t.add(make_connective("chi2", 1, parse("[B]x | q1")));
  t.add(make_connective("nab", 2, parse("q1 | nablaF{x, q2}")));
  return t;
}

const std::vector<std::string> kPQ = {"p", "q"};

// All models on 1..4 states over p, q, then 500 random ones on 5..6 states.
void for_each_standard_model(const std::function<void(const Frame&, const LaneValuation&)>& fn) {
  for (std::size_t n = 1; n <= 4; ++n) oracle::for_each_model(n, kPQ, fn);
  oracle::for_each_random_model(500, 5, 6, kPQ, 0x5eed, fn);
}

struct Tally {
  std::size_t models = 0;
  std::size_t failures = 0;
  std::string first;
  void fail(const std::string& what) {
    if (failures++ == 0) first = what;
  }
  std::string summary(const std::string& unit = "models") const {
    std::ostringstream os;
    os << models << " " << unit << ", " << failures << " mismatches";
    if (failures) os << " (first: " << first << ")";
    return os.str();
  }
};

bool words_equal(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b, std::uint64_t mask) {
  for (std::size_t s = 0; s < a.size(); ++s)
    if ((a[s] ^ b[s]) & mask) return false;
  return true;
}

// ---------------------------------------------------------------- 1

Outcome nabla_equivalences(const Options&) {
  auto t = standard_table();
  const std::vector<std::string> pool_text = {
      "p",           "q",          "~p",           "p & q",        "p | ~q",         "<F>p",   "[F]q",
      "<B>p",        "[B]~q",      "<F><B>p",      "[F](p | q)",   "<B>[F]p",        "p -> <F>q",
      "_|_",         "~_|_",       "<F>p & <B>q",  "nablaF{p, q}", "#reach(p)",      "#chi2(q)",
      "[B]<F>~p"};
  std::vector<Formula> roots;
  for (const auto& s : pool_text) {
    Formula phi = parse(s, t);
    for (Dir d : {Dir::F, Dir::B}) {
      roots.push_back(dia(d, phi));
      roots.push_back(nabla(d, {phi, top()}));
      roots.push_back(box(d, phi));
      roots.push_back(lor(nabla(d, {}), nabla(d, {phi})));
    }
  }
  Program prog(roots);
  Evaluator ev(prog);
  Tally tally;
  for_each_standard_model([&](const Frame& f, const LaneValuation& lv) {
    ev.run(f, lv);
    tally.models += lv.lanes;
    for (std::size_t i = 0; i < roots.size(); i += 2)
      if (!words_equal(ev.result(i), ev.result(i + 1), ev.lane_mask()))
        tally.fail(print(roots[i]) + " on a " + std::to_string(f.size()) + "-state model");
  });
  return {1, "", tally.failures == 0, tally.summary() + ", " + std::to_string(pool_text.size()) + " formulas", 0};
}

// ---------------------------------------------------------------- 2

Outcome axiom_soundness(const Options& opt) {
  auto t = standard_table();
  std::vector<Formula> pool = {parse("p"), parse("q"), parse("<F>p"), parse("#reach(p)", t)};
  auto inst = axiom_instances(pool);
  if (opt.mutate_axiom && !inst.empty()) inst[0] = box(Dir::F, bottom());
  Program prog(inst);
  Evaluator ev(prog);
  Tally tally;
  for_each_standard_model([&](const Frame& f, const LaneValuation& lv) {
    ev.run(f, lv);
    tally.models += lv.lanes;
    for (std::size_t i = 0; i < inst.size(); ++i)
      for (auto w : ev.result(i))
        if ((w & ev.lane_mask()) != ev.lane_mask()) {
          tally.fail(print(inst[i]));
          break;
        }
  });
  return {2, "", tally.failures == 0, std::to_string(inst.size()) + " instances, " + tally.summary(), 0};
}

// ---------------------------------------------------------------- 3

Outcome relation_semantics(const Options&) {
  const std::vector<Formula> psi_pool = {parse("p"), parse("q"), parse("~p"), parse("<F>q"), parse("p & ~q")};
  std::vector<std::vector<std::size_t>> sets = {{}};
  for (std::size_t i = 0; i < psi_pool.size(); ++i) {
    sets.push_back({i});
    for (std::size_t j = i + 1; j < psi_pool.size(); ++j) sets.push_back({i, j});
  }
  std::vector<Formula> roots = psi_pool;
  std::vector<std::pair<std::size_t, Dir>> cases;  // (set, dir) per nabla root
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (Dir d : {Dir::F, Dir::B}) {
      std::vector<Formula> elems;
      for (auto i : sets[s]) elems.push_back(psi_pool[i]);
      roots.push_back(nabla(d, elems));
      cases.emplace_back(s, d);
    }
  Program prog(roots);
  Evaluator ev(prog);
  Tally tally;
  std::size_t pointwise = 0;
  for_each_standard_model([&](const Frame& f, const LaneValuation& lv) {
    ev.run(f, lv);
    tally.models += lv.lanes;
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const auto& [s, d] = cases[c];
      std::vector<std::span<const std::uint64_t>> psi;
      for (auto i : sets[s]) psi.push_back(ev.result(i));
      auto rel = nabla_relation_lanes(psi, d, f, ev.lane_mask());
      if (!words_equal(rel, ev.result(psi_pool.size() + c), ev.lane_mask()))
        tally.fail(print(roots[psi_pool.size() + c]));
    }
    // The state-wise form on single-valuation and small models.
    if (lv.lanes == 1 || f.size() <= 2) {
      for (std::size_t lane = 0; lane < lv.lanes; ++lane) {
        KripkeModel m(f);
        for (const auto& [p, words] : lv.words)
          for (std::size_t st = 0; st < f.size(); ++st)
            if ((words[st] >> lane) & 1) m.set(p, st);
        for (std::size_t c = 0; c < cases.size(); ++c) {
          const auto& [s, d] = cases[c];
          std::vector<Formula> elems;
          for (auto i : sets[s]) elems.push_back(psi_pool[i]);
          auto expect = ev.result(psi_pool.size() + c);
          for (std::size_t w = 0; w < f.size(); ++w) {
            ++pointwise;
            if (eval_nabla_via_relation(elems, d, m, w) != bool((expect[w] >> lane) & 1))
              tally.fail("pointwise " + print(roots[psi_pool.size() + c]));
          }
        }
      }
    }
  });
  return {3, "", tally.failures == 0,
          tally.summary() + ", " + std::to_string(cases.size()) + " covers, " + std::to_string(pointwise) +
              " pointwise checks",
          0};
}

// ---------------------------------------------------------------- 4

Outcome approximants(const Options&) {
  auto t = standard_table();
  const Formula theta = parse("p");
  std::vector<Formula> roots;
  struct Case {
    std::string name;
    std::size_t sharp, first;  // root indices: ♯, then χ^0..χ^6
  };
  std::vector<Case> cases;
  for (const char* name : {"reach", "reachb", "chi1", "chi2"}) {
    const Connective& c = *t.find(name);
    Case k{name, roots.size(), roots.size() + 1};
    roots.push_back(sharp(t.find(name), {theta}));
    for (std::size_t i = 0; i <= 6; ++i) roots.push_back(approximant(c, i, {theta}));
    cases.push_back(k);
  }
  Program prog(roots);
  Evaluator ev(prog);
  Tally tally;
  for_each_standard_model([&](const Frame& f, const LaneValuation& lv) {
    ev.run(f, lv);
    tally.models += lv.lanes;
    const auto mask = ev.lane_mask();
    for (const auto& c : cases) {
      auto full = ev.result(c.sharp);
      for (std::size_t i = 0; i <= 6; ++i) {
        auto a = ev.result(c.first + i);
        for (std::size_t s = 0; s < f.size(); ++s)
          if (a[s] & ~full[s] & mask) tally.fail(c.name + " approximant " + std::to_string(i) + " not below");
      }
      if (!words_equal(ev.result(c.first + f.size()), full, mask))
        tally.fail(c.name + " approximant " + std::to_string(f.size()) + " differs");
    }
  });
  return {4, "", tally.failures == 0, tally.summary(), 0};
}

// ---------------------------------------------------------------- 5

Outcome least_fixpoint(const Options&) {
  auto t = standard_table();
  std::vector<Formula> fs;
  for (const char* s : {"#reach(p)", "#reachb(p)", "#chi1(p)", "#chi2(q)", "#reach(~#chi1(q))",
                        "#chi1(p | #reachb(q))", "~#reach(<B>p)", "#nab(p, q)", "#reach(#reachb(p) & q)"})
    fs.push_back(parse(s, t));
  Program prog(fs);
  Evaluator ev(prog);
  Tally tally;
  for (std::size_t n = 1; n <= 3; ++n)
    oracle::for_each_model(n, kPQ, [&](const Frame& f, const LaneValuation& lv) {
      ev.run(f, lv);
      for (std::size_t lane = 0; lane < lv.lanes; ++lane) {
        ++tally.models;
        auto m = oracle::lane_model(f, lv, lane);
        for (std::size_t i = 0; i < fs.size(); ++i) {
          auto want = oracle::naive_eval(fs[i], m);
          auto got = ev.result(i);
          for (std::size_t s = 0; s < n; ++s)
            if (bool((got[s] >> lane) & 1) != bool(want[s])) {
              tally.fail(print(fs[i]));
              break;
            }
        }
      }
    });
  return {5, "", tally.failures == 0, tally.summary() + ", " + std::to_string(fs.size()) + " formulas", 0};
}

// ---------------------------------------------------------------- 6

Outcome no_finite_model(const Options&) {
  auto t = standard_table();
  auto chi1 = t.find("chi1"), chi2 = t.find("chi2");
  Formula f1 = neg(sharp(chi1, {neg(sharp(chi2, {bottom()}))}));
  Formula f2 = sharp(chi1, {var("p")});
  auto w1 = brute_force_sat(f1, 4);
  auto w2 = brute_force_sat(f2, 2);
  bool ok2 = false;
  if (w2) ok2 = oracle::naive_eval(f2, oracle::from_kripke(w2->model))[w2->state];
  std::ostringstream os;
  os << print(f1) << ": " << (w1 ? "witness found" : "none ≤ 4") << "; " << print(f2) << ": "
     << (w2 ? (ok2 ? "witness confirmed" : "witness rejected by oracle") : "none ≤ 2");
  return {6, "", !w1 && w2 && ok2, os.str(), 0};
}

// ---------------------------------------------------------------- 7

// Random dir-disjunctive bodies; size counts grammar constructors.
class BodyGen {
 public:
  BodyGen(std::mt19937_64& rng, Dir d, std::size_t arity) : rng_(rng), d_(d), arity_(arity) {}

  Formula gen(std::size_t budget) {
    std::size_t used = 0;
    return node(budget, used);
  }

 private:
  Formula leaf() {
    std::uniform_int_distribution<int> k(0, 3);
    Formula q = var(param_name(std::uniform_int_distribution<std::size_t>(1, arity_)(rng_)));
    switch (k(rng_)) {
      case 0: return neg(q);
      case 1: return top();
      default: return q;
    }
  }

  Formula node(std::size_t budget, std::size_t& used) {
    // each constructor costs one; children share what is left
    ++used;
    const std::size_t left = budget > used ? budget - used : 0;
    std::uniform_int_distribution<int> pick(0, left >= 2 ? 6 : (left >= 1 ? 4 : 1));
    switch (pick(rng_)) {
      case 0: return var(kRecVar);
      case 1: return leaf();
      case 2: return dia(d_, node(budget, used));
      case 3: return box(d_, node(budget, used));
      case 4: {
        Formula th = leaf();
        ++used;
        return land(th, node(budget, used));
      }
      case 5: {
        Formula a = node(budget, used);
        return lor(a, node(budget, used));
      }
      default: {
        std::vector<Formula> el{node(budget, used)};
        if (used < budget) el.push_back(node(budget, used));
        return nabla(d_, el);
      }
    }
  }

  std::mt19937_64& rng_;
  Dir d_;
  std::size_t arity_;
};


Outcome guardification(const Options&) {
  std::mt19937_64 rng(0x9a4d);
  Tally tally;
  std::size_t made = 0, tries = 0, unguarded = 0;
  std::vector<std::shared_ptr<const Connective>> conns;
  while (conns.size() < 50 && tries < 100000) {
    ++tries;
    const Dir d = std::bernoulli_distribution(0.5)(rng) ? Dir::F : Dir::B;
    const std::size_t arity = std::uniform_int_distribution<std::size_t>(1, 2)(rng);
    BodyGen g(rng, d, arity);
    Formula body = g.gen(8);
    if (!body.mentions(kRecVar)) continue;
    auto c = make_connective("g" + std::to_string(conns.size()), arity, body);
    if (c->disjunctive == Disjunctive::None) {
      tally.fail("generated body not recognised as disjunctive: " + print(body));
      continue;
    }
    unguarded += !c->guarded;
    conns.push_back(c);
  }
  const std::vector<std::string> vars = {kRecVar, "q1", "q2"};
  for (const auto& c : conns) {
    ++made;
    auto g = guardify(*c);
    if (!g.gamma2->guarded || !oracle::guarded_def(g.gamma2->body)) tally.fail(c->name + ": gamma2 not guarded");
    if (g.gamma2->disjunctive == Disjunctive::None) tally.fail(c->name + ": gamma2 not disjunctive");
    // the split is valid, and both connectives have the same least fixpoint
    std::vector<Formula> theta{var("p"), var("q")};
    theta.resize(c->arity);
    Program prog({g.equivalence, sharp(c, theta), sharp(g.gamma2, theta)});
    Evaluator ev(prog);
    for (std::size_t n = 1; n <= 3; ++n) {
      oracle::for_each_model(n, vars, [&](const Frame& f, const LaneValuation& lv) {
        LaneValuation full = lv;
        full.words["p"] = lv.words.at("q1");
        full.words["q"] = lv.words.at("q2");
        ev.run(f, full);
        tally.models += lv.lanes;
        for (auto w : ev.result(0))
          if ((w & ev.lane_mask()) != ev.lane_mask()) {
            tally.fail(c->name + ": equivalence fails for " + print(c->body));
            break;
          }
        if (!words_equal(ev.result(1), ev.result(2), ev.lane_mask()))
          tally.fail(c->name + ": fixpoints differ for " + print(c->body));
      });
    }
  }
  std::ostringstream os;
  os << made << " connectives (" << unguarded << " unguarded), " << tally.summary();
  return {7, "", made == 50 && tally.failures == 0, os.str(), 0};
}

// ---------------------------------------------------------------- 8

NodeSet random_subset(const Network& n, std::mt19937_64& rng) {
  NodeSet x;
  std::bernoulli_distribution coin(0.4);
  for (const auto& [u, l] : n.labels())
    if (coin(rng)) x.insert(u);
  return x;
}

Outcome network_algebra(const Options&) {
  auto ctx = make_context(parse("(<F>p | <B>~p) & [F]q"));
  std::mt19937_64 rng(0xa19e);
  Tally tally;
  for (int i = 0; i < 200; ++i) {
    ++tally.models;
    Network n = oracle::random_forest(ctx, 10, rng);
    if (!validate(n).empty()) tally.fail("generated forest is not a network");
    if (!is_anticonfluent(n) || !oracle::at_most_one_path(n)) tally.fail("forest judged confluent");
    NodeSet x = random_subset(n, rng), y = random_subset(n, rng);
    if (upgen(n, x) != oracle::up_closure(n, x)) tally.fail("upgen");
    if (downgen(n, x) != oracle::down_closure(n, x)) tally.fail("downgen");
    if (!oracle::same(restrict(n, x), oracle::restrict_def(n, x))) tally.fail("restrict");
    if (!oracle::same(restrict(n, n.nodes()), n)) tally.fail("restrict to all nodes");
    NodeSet rest;
    for (auto u : n.nodes())
      if (!x.count(u)) rest.insert(u);
    if (!oracle::same(complement(n, x), oracle::restrict_def(n, rest))) tally.fail("complement");
    Network a = oracle::restrict_def(n, x), b = oracle::restrict_def(n, y);
    if (!oracle::same(network_union({a, b}), oracle::union_def({a, b}))) tally.fail("union");
    NodeId next = n.next_id();
    Network g = oracle::grow(n, n.nodes(), Dir::F, 3, rng, next);
    g = oracle::grow(g, g.nodes(), Dir::B, 2, rng, next);
    if (is_subnetwork(n, g) != oracle::subnetwork_def(n, g)) tally.fail("is_subnetwork");
    if (is_subnetwork(g, n) != oracle::subnetwork_def(g, n)) tally.fail("is_subnetwork reversed");
    if (!n.nodes().empty()) {
      NodeSet u{*n.nodes().begin()};
      if (equp(n, g, u) != oracle::equp_def(n, g, u)) tally.fail("equp");
      if (eqdown(n, g, u) != oracle::eqdown_def(n, g, u)) tally.fail("eqdown");
    }
    if (is_down_cofinal(n, g) != oracle::down_cofinal_def(n, g)) tally.fail("is_down_cofinal");
    if (is_up_cofinal(n, g) != oracle::up_cofinal_def(n, g)) tally.fail("is_up_cofinal");
  }
  std::size_t confluent = 0;
  for (int i = 0; i < 200; ++i) {
    ++tally.models;
    Network n = oracle::random_dag(ctx, 2 + i % 9, 0.3, rng);
    bool want = oracle::at_most_one_path(n);
    confluent += !want;
    if (is_anticonfluent(n) != want) tally.fail("is_anticonfluent on a DAG");
    NodeSet x = random_subset(n, rng);
    if (upgen(n, x) != oracle::up_closure(n, x) || downgen(n, x) != oracle::down_closure(n, x))
      tally.fail("gen sets on a DAG");
  }

  std::size_t instances = 0, attempts = 0;
  while (instances < 100 && attempts < 10000) {
    ++attempts;
    Network n = oracle::random_forest(ctx, 10, rng);
    const Dir dir = std::bernoulli_distribution(0.5)(rng) ? Dir::F : Dir::B;
    auto gen = [&](const Network& net, const NodeSet& s) {
      return dir == Dir::F ? oracle::up_closure(net, s) : oracle::down_closure(net, s);
    };
    const NodeSet all = n.nodes();
    std::vector<NodeId> order(all.begin(), all.end());
    std::shuffle(order.begin(), order.end(), rng);
    NodeSet taken, attach;
    for (auto u : order) {
      if (attach.size() == 3) break;
      NodeSet s = gen(n, {u});
      if (std::any_of(s.begin(), s.end(), [&](NodeId v) { return taken.count(v); })) continue;
      taken.insert(s.begin(), s.end());
      attach.insert(u);
    }
    NodeId next = n.next_id();
    std::vector<std::pair<NodeId, Network>> parts;
    for (auto u : attach) {
      std::size_t k = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
      parts.emplace_back(u, oracle::grow(n, gen(n, {u}), dir, k, rng, next));
    }
    // keep instances whose preconditions hold by the definitions
    bool pre = !parts.empty();
    NodeSet seen;
    for (const auto& [u, p] : parts) {
      pre = pre && oracle::subnetwork_def(n, p) && oracle::at_most_one_path(p) &&
            (dir == Dir::F ? oracle::equp_def(n, p, {u}) && oracle::down_cofinal_def(n, p)
                           : oracle::eqdown_def(n, p, {u}) && oracle::up_cofinal_def(n, p));
      for (auto v : gen(p, {u})) pre = pre && seen.insert(v).second;
    }
    if (!pre) continue;
    ++instances;
    try {
      Network r = amalgamate(n, parts, dir);
      if (!oracle::at_most_one_path(r)) tally.fail("amalgam not anticonfluent");
      for (const auto& [u, p] : parts)
        if (!oracle::subnetwork_def(p, r)) tally.fail("part not a subnetwork of the amalgam");
      if (dir == Dir::F ? !oracle::equp_def(n, r, attach) : !oracle::eqdown_def(n, r, attach))
        tally.fail("amalgam changes the network outside the attachment cones");
      if (dir == Dir::F ? !oracle::down_cofinal_def(n, r) : !oracle::up_cofinal_def(n, r))
        tally.fail("base not cofinal in the amalgam");
      if (!validate(r).empty()) tally.fail("amalgam is not a network");
    } catch (const std::exception& e) {
      tally.fail(std::string("amalgamate threw: ") + e.what());
    }
  }
  std::ostringstream os;
  os << tally.summary("networks") << ", " << confluent << " confluent DAGs, " << instances << " amalgamations";
  return {8, "", tally.failures == 0 && instances == 100, os.str(), 0};
}

// ---------------------------------------------------------------- 9

Outcome stay_finished(const Options&) {
  auto t = standard_table();
  auto ctx = make_context(parse("#reach(p) & (#chi2(q) | #nab(p, q))", t));
  std::mt19937_64 rng(0x57a7);
  std::vector<std::pair<Network, Network>> pairs;
  while (pairs.size() < 50) {
    Network n = oracle::random_forest(ctx, 8, rng);
    NodeId next = n.next_id();
    Network g = oracle::grow(n, n.nodes(), Dir::F, std::uniform_int_distribution<std::size_t>(1, 4)(rng), rng, next);
    g = oracle::grow(g, g.nodes(), Dir::B, std::uniform_int_distribution<std::size_t>(0, 3)(rng), rng, next);
    std::bernoulli_distribution coin(0.6);
    for (const auto& [u, l] : g.labels())
      for (Dir d : {Dir::F, Dir::B})
        if (coin(rng) && witnesses_saturation(g, u, d)) g.mark_saturated(u, d);
    pairs.emplace_back(std::move(n), std::move(g));
  }
  // pairs from the construction itself, 50 spread over every viable atom
  Budget small{60, 4, 4};
  std::vector<std::pair<Network, Network>> chain;
  for (const Atom* ap : ctx->preference()) {
    auto rep = build(ctx, *ap, small);
    Network prev(ctx);
    prev.add_node(0, *ap);
    for (const auto& s : rep.snapshots) {
      chain.emplace_back(prev, s);
      prev = s;
      // and a random extension of the snapshot
      NodeId next = s.next_id();
      chain.emplace_back(s, oracle::grow(s, s.nodes(), Dir::B, 3, rng, next));
    }
  }
  for (std::size_t i = 0; i < 50 && !chain.empty(); ++i) pairs.push_back(chain[i * chain.size() / 50]);
  Tally tally;
  std::size_t triples = 0, modal = 0;
  for (const auto& [n, g] : pairs) {
    ++tally.models;
    if (!oracle::subnetwork_def(n, g)) {
      tally.fail("generated pair is not a subnetwork pair");
      continue;
    }
    auto tn = compute_timeouts(n), tg = compute_timeouts(g);
    if (tn != oracle::timeouts_def(n) || tg != oracle::timeouts_def(g)) tally.fail("timeouts differ from the definition");
    for (const auto& [key, k] : tn) {
      if (!k) continue;
      ++triples;
      modal += *k > 0;
      auto it = tg.find(key);
      if (it == tg.end() || it->second != k)
        tally.fail("node " + std::to_string(key.first) + " deferral " + std::to_string(key.second));
    }
  }
  std::ostringstream os;
  os << tally.summary("pairs") << ", " << triples << " finished triples (" << modal << " with timeout > 0)";
  return {9, "", tally.failures == 0 && pairs.size() == 100, os.str(), 0};
}

// ---------------------------------------------------------------- 10

Outcome truth_lemma(const Options&) {
  auto t = standard_table();
  const std::vector<std::string> formulas = {
      "p",          "<F>p & [F]q",     "<B>p",         "<F>p & <B>q",       "<F><B>p & [B]q",
      "[F](p | <F>q)", "<F>(p & <B>q)", "#chi1(p)",     "#reach(p)",         "#chi2(q) & <B>p",
      "~p & #reach(p)", "[B]p & <F>~p",  "<F>p & <F>~p", "<B>(q & <F>~q)",    "#reachb(p) & q"};
  Tally tally;
  std::size_t perfect = 0, labels = 0, built = 0;
  for (const auto& s : formulas) {
    if (perfect >= 20) break;
    Formula phi = parse(s, t);
    auto ctx = make_context(phi);
    const std::size_t root = ctx->sigma().index(phi);
    for (const Atom& a : ctx->atoms()) {
      if (perfect >= 20) break;
      if (!a.test(root)) continue;
      ++built;
      auto rep = build(ctx, a);
      if (rep.verdict != ConstructionReport::Verdict::Perfect) continue;
      ++perfect;
      const Network& n = rep.network;
      if (!validate(n).empty() || !find_defects(n).empty()) tally.fail(s + ": perfect network is defective");
      if (!truth_lemma_failures(n).empty()) tally.fail(s + ": eval rejects a label formula");
      auto m = oracle::from_kripke(extract_model(n));
      std::size_t state = 0;
      for (const auto& [u, l] : n.labels()) {
        for (auto i = l.find_first(); i != Atom::npos; i = l.find_next(i)) {
          ++labels;
          if (!oracle::naive_eval(ctx->sigma().at(i), m)[state])
            tally.fail(s + ": oracle rejects " + print(ctx->sigma().at(i)));
        }
        ++state;
      }
    }
  }
  tally.models = perfect;
  std::ostringstream os;
  os << perfect << " perfect networks from " << built << " builds, " << labels << " label formulas checked, "
     << tally.failures << " failures";
  if (tally.failures) os << " (first: " << tally.first << ")";
  return {10, "", perfect >= 20 && tally.failures == 0, os.str(), 0};
}

// ---------------------------------------------------------------- 11

Outcome determinism(const Options& opt) {
  if (!opt.cli) return {11, "", false, "no command runner available", 0};
  auto dir = std::filesystem::temp_directory_path() / "flatmu-determinism";
  std::filesystem::create_directories(dir);
  auto defs = dir / "defs.json";
  {
    std::ofstream os(defs);
    os << R"([{"name": "reach", "arity": 1, "body": "q1 | <F>x"}, {"name": "chi1", "arity": 1, "body": "[F]x | q1"}])";
  }
  const std::vector<std::vector<std::string>> inputs = {
      {"build", "<F>p & <B>q & [F](q | <F>p)"},
      {"--defs", defs.string(), "build", "--max-nodes", "80", "~p & #reach(p) & <B>q"},
      {"--defs", defs.string(), "build", "#chi1(p) | <F>#reach(q)"}};
  std::size_t bytes = 0;
  bool same = true;
  for (const auto& args : inputs) {
    std::ostringstream o1, e1, o2, e2;
    int r1 = opt.cli(args, o1, e1);
    int r2 = opt.cli(args, o2, e2);
    same = same && r1 == r2 && o1.str() == o2.str() && e1.str() == e2.str() && r1 != 1;
    bytes += o1.str().size();
  }
  std::filesystem::remove_all(dir);
  return {11, "", same, std::to_string(inputs.size()) + " builds run twice, " + std::to_string(bytes) +
                            " report bytes each, " + (same ? "identical" : "different"), 0};
}

using Fn = Outcome (*)(const Options&);
const std::vector<std::pair<int, Fn>>& table() {
  static const std::vector<std::pair<int, Fn>> t = {
      {1, nabla_equivalences}, {2, axiom_soundness}, {3, relation_semantics}, {4, approximants},
      {5, least_fixpoint},     {6, no_finite_model}, {7, guardification},    {8, network_algebra},
      {9, stay_finished},      {10, truth_lemma},    {11, determinism}};
  return t;
}

// Wall-clock limits per criterion, in seconds.
double limit(int id) {
  switch (id) {
    case 1:
    case 2: return 60;
    case 5: return 30;
    case 6: return 120;
    case 10: return 300;
    default: return 0;
  }
}

}  // namespace

const std::vector<std::pair<int, std::string>>& criteria() {
  static const std::vector<std::pair<int, std::string>> c = {
      {1, "nabla equivalences"},      {2, "axiom soundness"},       {3, "full-relation semantics"},
      {4, "approximants"},            {5, "least-fixpoint oracle"}, {6, "no-finite-model example"},
      {7, "guardification"},          {8, "network algebra"},       {9, "stay-finished"},
      {10, "truth lemma"},            {11, "determinism"}};
  return c;
}

Outcome run_criterion(int id, const Options& opt) {
  std::string title;
  for (const auto& [i, t] : criteria())
    if (i == id) title = t;
  Fn fn = nullptr;
  for (const auto& [i, f] : table())
    if (i == id) fn = f;
  if (!fn) return {id, "unknown", false, "no such criterion", 0};
  auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn(opt);
  } catch (const std::exception& e) {
    o = {id, "", false, std::string("exception: ") + e.what(), 0};
  }
  o.id = id;
  o.title = title;
  o.seconds = since(t0);
  if (limit(id) > 0 && o.seconds > limit(id)) {
    o.pass = false;
    o.detail += "; over the " + std::to_string(static_cast<int>(limit(id))) + " s limit";
  }
  return o;
}

std::vector<Outcome> run_all(const Options& opt, const std::function<void(const Outcome&)>& on_done) {
  std::vector<Outcome> out;
  for (const auto& [id, title] : criteria()) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
    out.push_back(run_criterion(id, opt));
    if (on_done) on_done(out.back());
  }
  return out;
}

void print_outcome(std::ostream& os, const Outcome& o) {
  os << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << o.id << "  " << std::left << std::setw(24) << o.title
     << std::right << std::fixed << std::setprecision(2) << std::setw(8) << o.seconds << " s  " << o.detail << "\n";
  os.unsetf(std::ios::fixed);
}

}  // namespace flatmu::acceptance
