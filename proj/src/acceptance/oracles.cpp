#include "oracles.hpp"

#include <algorithm>
#include <deque>
#include <tuple>

namespace flatmu::oracle {

namespace {

using Env = std::map<std::string, States>;

States eval_env(const Formula& f, const SmallModel& m, const Env& env) {
  const std::size_t n = m.n;
  States out(n, 0);
  switch (f.kind()) {
    case Kind::Bottom:
      break;
    case Kind::Var: {
      if (auto it = env.find(f.name()); it != env.end()) return it->second;
      if (auto it = m.val.find(f.name()); it != m.val.end()) return it->second;
      break;
    }
    case Kind::Neg: {
      States a = eval_env(f.child(), m, env);
      for (std::size_t s = 0; s < n; ++s) out[s] = !a[s];
      break;
    }
    case Kind::Or: {
      States a = eval_env(f.left(), m, env), b = eval_env(f.right(), m, env);
      for (std::size_t s = 0; s < n; ++s) out[s] = a[s] || b[s];
      break;
    }
    case Kind::DiaF:
    case Kind::DiaB: {
      States a = eval_env(f.child(), m, env);
      const bool fwd = f.kind() == Kind::DiaF;
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t)
          if ((fwd ? m.rel[s][t] : m.rel[t][s]) && a[t]) out[s] = 1;
      break;
    }
    case Kind::Sharp: {
      std::vector<States> args;
      for (const auto& a : f.args()) args.push_back(eval_env(a, m, env));
      return lfp_by_prefixpoints(f.connective(), args, m);
    }
  }
  return out;
}

Env body_env(const std::vector<States>& args) {
  Env e;
  for (std::size_t i = 0; i < args.size(); ++i) e[param_name(i + 1)] = args[i];
  return e;
}

struct Matrix {
  std::vector<NodeId> ids;
  std::map<NodeId, std::size_t> pos;
  std::vector<std::vector<char>> reach;  // transitive, not reflexive
};

Matrix closure_matrix(const Network& n) {
  Matrix m;
  for (const auto& [u, l] : n.labels()) {
    m.pos[u] = m.ids.size();
    m.ids.push_back(u);
  }
  const std::size_t k = m.ids.size();
  m.reach.assign(k, std::vector<char>(k, 0));
  for (const auto& [u, v] : n.edges()) m.reach[m.pos[u]][m.pos[v]] = 1;
  for (std::size_t b = 0; b < k; ++b)
    for (std::size_t a = 0; a < k; ++a)
      if (m.reach[a][b])
        for (std::size_t c = 0; c < k; ++c)
          if (m.reach[b][c]) m.reach[a][c] = 1;
  return m;
}

}  // namespace

SmallModel from_kripke(const KripkeModel& km) {
  SmallModel m;
  m.n = km.size();
  m.rel.assign(m.n, std::vector<char>(m.n, 0));
  for (const auto& [a, b] : km.frame.edges()) m.rel[a][b] = 1;
  for (const auto& [p, set] : km.valuation) {
    States s(m.n, 0);
    for (std::size_t i = 0; i < m.n && i < set.size(); ++i) s[i] = set.test(i);
    m.val[p] = s;
  }
  return m;
}

SmallModel lane_model(const Frame& f, const LaneValuation& v, std::size_t lane) {
  SmallModel m;
  m.n = f.size();
  m.rel.assign(m.n, std::vector<char>(m.n, 0));
  for (std::size_t a = 0; a < m.n; ++a)
    for (std::size_t b = 0; b < m.n; ++b) m.rel[a][b] = f.has_edge(a, b);
  for (const auto& [p, words] : v.words) {
    States s(m.n, 0);
    for (std::size_t i = 0; i < m.n; ++i) s[i] = (words[i] >> lane) & 1;
    m.val[p] = s;
  }
  return m;
}

States naive_eval(const Formula& f, const SmallModel& m) { return eval_env(f, m, {}); }

States lfp_by_prefixpoints(const Connective& c, const std::vector<States>& args, const SmallModel& m) {
  const std::size_t n = m.n;
  Env env = body_env(args);
  if (n <= 6) {
    States meet(n, 1);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      States s(n, 0);
      for (std::size_t i = 0; i < n; ++i) s[i] = (mask >> i) & 1;
      env[kRecVar] = s;
      States img = eval_env(c.body, m, env);
      bool pre = true;
      for (std::size_t i = 0; i < n; ++i) pre = pre && (!img[i] || s[i]);
      if (!pre) continue;
      for (std::size_t i = 0; i < n; ++i) meet[i] = meet[i] && s[i];
    }
    return meet;
  }
  States s(n, 0);
  for (;;) {
    env[kRecVar] = s;
    States next = eval_env(c.body, m, env);
    if (next == s) return s;
    s = std::move(next);
  }
}

void for_each_model(std::size_t n, const std::vector<std::string>& vars,
                    const std::function<void(const Frame&, const LaneValuation&)>& fn) {
  const std::size_t nv = vars.size();
  const std::uint64_t nval = std::uint64_t{1} << (n * nv);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n * n)); ++mask) {
    Frame frame(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if ((mask >> (i * n + j)) & 1) frame.add_edge(i, j);
    for (std::uint64_t base = 0; base < nval; base += 64) {
      LaneValuation lv;
      lv.lanes = static_cast<std::size_t>(std::min<std::uint64_t>(64, nval - base));
      for (std::size_t j = 0; j < nv; ++j) {
        std::vector<std::uint64_t> w(n, 0);
        for (std::size_t l = 0; l < lv.lanes; ++l)
          for (std::size_t s = 0; s < n; ++s)
            if (((base + l) >> (j * n + s)) & 1) w[s] |= std::uint64_t{1} << l;
        lv.words[vars[j]] = std::move(w);
      }
      fn(frame, lv);
    }
  }
}

void for_each_random_model(std::size_t count, std::size_t min_n, std::size_t max_n,
                           const std::vector<std::string>& vars, std::uint64_t seed,
                           const std::function<void(const Frame&, const LaneValuation&)>& fn) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(min_n, max_n);
  std::bernoulli_distribution edge(0.3), bit(0.5);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t n = size(rng);
    Frame frame(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (edge(rng)) frame.add_edge(i, j);
    LaneValuation lv;
    lv.lanes = 1;
    for (const auto& v : vars) {
      std::vector<std::uint64_t> w(n, 0);
      for (auto& x : w) x = bit(rng);
      lv.words[v] = std::move(w);
    }
    fn(frame, lv);
  }
}

// ---------------------------------------------------------------- graphs

NodeSet up_closure(const Network& n, const NodeSet& x) {
  Matrix m = closure_matrix(n);
  NodeSet out = x;
  for (auto u : x)
    for (std::size_t j = 0; j < m.ids.size(); ++j)
      if (m.reach[m.pos.at(u)][j]) out.insert(m.ids[j]);
  return out;
}

NodeSet down_closure(const Network& n, const NodeSet& x) {
  Matrix m = closure_matrix(n);
  NodeSet out = x;
  for (auto u : x)
    for (std::size_t j = 0; j < m.ids.size(); ++j)
      if (m.reach[j][m.pos.at(u)]) out.insert(m.ids[j]);
  return out;
}

bool at_most_one_path(const Network& n) {
  // paths[u][w] = number of distinct directed paths u ->+ w, capped at 2
  std::map<NodeId, int> indeg;
  for (const auto& [u, l] : n.labels()) indeg[u] = static_cast<int>(n.predecessors(u).size());
  std::deque<NodeId> q;
  for (const auto& [u, d] : indeg)
    if (d == 0) q.push_back(u);
  std::vector<NodeId> topo;
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop_front();
    topo.push_back(u);
    for (auto v : n.successors(u))
      if (--indeg[v] == 0) q.push_back(v);
  }
  if (topo.size() != n.size()) return false;  // cyclic
  std::map<NodeId, std::map<NodeId, int>> paths;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    auto& row = paths[*it];
    for (auto v : n.successors(*it)) {
      row[v] = std::min(2, row[v] + 1);
      for (const auto& [w, c] : paths[v]) row[w] = std::min(2, row[w] + c);
    }
    for (const auto& [w, c] : row)
      if (c > 1) return false;
  }
  return true;
}

bool contains_def(const Network& a, const Network& b) {
  for (const auto& [u, l] : a.labels())
    if (!b.contains(u) || b.label(u) != l) return false;
  for (const auto& [u, lu] : a.labels())
    for (const auto& [v, lv] : a.labels())
      if (a.has_edge(u, v) != b.has_edge(u, v)) return false;
  for (Dir d : {Dir::F, Dir::B})
    for (auto u : a.saturated(d))
      if (!b.is_saturated(u, d)) return false;
  return true;
}

bool subnetwork_def(const Network& a, const Network& b) {
  if (!contains_def(a, b)) return false;
  for (auto u : a.saturated(Dir::F))
    for (auto v : b.successors(u))
      if (!a.contains(v)) return false;
  for (auto u : a.saturated(Dir::B))
    for (auto v : b.predecessors(u))
      if (!a.contains(v)) return false;
  return true;
}

bool down_cofinal_def(const Network& a, const Network& b) {
  Matrix m = closure_matrix(b);
  for (const auto& [u, l] : a.labels())
    for (std::size_t j = 0; j < m.ids.size(); ++j)
      if (m.reach[j][m.pos.at(u)] && !a.contains(m.ids[j])) return false;
  return true;
}

bool up_cofinal_def(const Network& a, const Network& b) {
  Matrix m = closure_matrix(b);
  for (const auto& [u, l] : a.labels())
    for (std::size_t j = 0; j < m.ids.size(); ++j)
      if (m.reach[m.pos.at(u)][j] && !a.contains(m.ids[j])) return false;
  return true;
}

bool same(const Network& a, const Network& b) {
  return a.labels() == b.labels() && a.edges() == b.edges() && a.saturated(Dir::F) == b.saturated(Dir::F) &&
         a.saturated(Dir::B) == b.saturated(Dir::B);
}

Network restrict_def(const Network& n, const NodeSet& x) {
  Network r(n.context_ptr());
  for (auto u : x) r.add_node(u, n.label(u));
  for (const auto& [u, v] : n.edges())
    if (x.count(u) && x.count(v)) r.add_edge(u, v);
  for (Dir d : {Dir::F, Dir::B})
    for (auto u : n.saturated(d))
      if (x.count(u)) r.mark_saturated(u, d);
  return r;
}

Network union_def(const std::vector<Network>& parts) {
  Network r(parts.at(0).context_ptr());
  for (const auto& p : parts)
    for (const auto& [u, l] : p.labels()) r.add_node(u, l);
  for (const auto& p : parts) {
    for (const auto& [u, v] : p.edges()) r.add_edge(u, v);
    for (Dir d : {Dir::F, Dir::B})
      for (auto u : p.saturated(d)) r.mark_saturated(u, d);
  }
  return r;
}

namespace {

NodeSet minus(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

}  // namespace

bool equp_def(const Network& a, const Network& b, const NodeSet& x) {
  return same(restrict_def(a, minus(a.nodes(), up_closure(a, x))), restrict_def(b, minus(b.nodes(), up_closure(b, x))));
}

bool eqdown_def(const Network& a, const Network& b, const NodeSet& x) {
  return same(restrict_def(a, minus(a.nodes(), down_closure(a, x))),
              restrict_def(b, minus(b.nodes(), down_closure(b, x))));
}

// ---------------------------------------------------------------- timeouts

namespace {

// Whether some relation Z ⊆ allowed is full: every row and every column used.
bool full_relation(std::size_t rows, std::size_t cols, const std::vector<std::pair<std::size_t, std::size_t>>& allowed) {
  auto full = [&](std::uint64_t pick) {
    std::vector<char> r(rows, 0), c(cols, 0);
    for (std::size_t i = 0; i < allowed.size(); ++i)
      if ((pick >> i) & 1) r[allowed[i].first] = c[allowed[i].second] = 1;
    return std::all_of(r.begin(), r.end(), [](char x) { return x; }) &&
           std::all_of(c.begin(), c.end(), [](char x) { return x; });
  };
  if (allowed.size() > 16) return full(~std::uint64_t{0});  // the union of full relations is full
  for (std::uint64_t pick = 0; pick < (std::uint64_t{1} << allowed.size()); ++pick)
    if (full(pick)) return true;
  return false;
}

class Finisher {
 public:
  explicit Finisher(const Network& n) : n_(n), dt_(n.context().deferrals()) {}

  bool fin(NodeId u, std::size_t id, std::size_t k) {
    auto key = std::make_tuple(u, id, k);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    bool r = compute(u, id, k);
    memo_[key] = r;
    return r;
  }

 private:
  bool holds(const Deferral::Ref& c, NodeId v, std::size_t k) {
    return n_.label(v).test(c.inst) && (c.deferral < 0 || fin(v, static_cast<std::size_t>(c.deferral), k));
  }

  bool cover(NodeId u, Dir d, const std::vector<Deferral::Ref>& elems, std::size_t k) {
    if (!n_.is_saturated(u, d)) return false;
    std::vector<NodeId> nb(n_.neighbors(u, d).begin(), n_.neighbors(u, d).end());
    std::vector<std::pair<std::size_t, std::size_t>> allowed;
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = 0; j < elems.size(); ++j)
        if (holds(elems[j], nb[i], k)) allowed.emplace_back(i, j);
    return full_relation(nb.size(), elems.size(), allowed);
  }

  bool compute(NodeId u, std::size_t id, std::size_t k) {
    const Deferral& df = dt_.at(id);
    const Atom& l = n_.label(u);
    if (!l.test(df.inst)) return false;
    switch (df.kind) {
      case ViewNode::Kind::Leaf:
        return true;
      case ViewNode::Kind::X:
        return l.test(df.bot_unfold) || (k > 0 && fin(u, static_cast<std::size_t>(df.root), k - 1));
      case ViewNode::Kind::Or:
        return std::any_of(df.children.begin(), df.children.end(), [&](const auto& c) { return holds(c, u, k); });
      case ViewNode::Kind::And:
        return l.test(df.theta) && holds(df.children[0], u, k);
      case ViewNode::Kind::Dia: {
        // ∇{ψ, ⊤}
        Deferral::Ref top{-1, n_.sigma().top_index()};
        return cover(u, df.dir, {df.children[0], top}, k);
      }
      case ViewNode::Kind::Box:
        // ∇∅ ∨ ∇{ψ}
        return l.test(df.box_bottom) || (!n_.neighbors(u, df.dir).empty() && cover(u, df.dir, {df.children[0]}, k));
      case ViewNode::Kind::Nabla:
        return cover(u, df.dir, df.children, k);
    }
    return false;
  }

  const Network& n_;
  const DeferralTable& dt_;
  std::map<std::tuple<NodeId, std::size_t, std::size_t>, bool> memo_;
};

}  // namespace

TimeoutTable timeouts_def(const Network& n) {
  TimeoutTable t;
  const auto& dt = n.context().deferrals();
  const std::size_t cap = n.size() * dt.size() + 1;
  Finisher f(n);
  for (const auto& [u, l] : n.labels())
    for (std::size_t id = 0; id < dt.size(); ++id) {
      if (!l.test(dt.at(id).inst)) continue;
      std::optional<std::size_t> to;
      for (std::size_t k = 0; k <= cap && !to; ++k)
        if (f.fin(u, id, k)) to = k;
      t.emplace(std::make_pair(u, id), to);
    }
  return t;
}

// ---------------------------------------------------------------- syntax

namespace {

bool guarded_rec(const Formula& f, bool under) {
  switch (f.kind()) {
    case Kind::Bottom:
      return true;
    case Kind::Var:
      return f.name() != kRecVar || under;
    case Kind::Neg:
      return guarded_rec(f.child(), under);
    case Kind::Or:
      return guarded_rec(f.left(), under) && guarded_rec(f.right(), under);
    case Kind::DiaF:
    case Kind::DiaB:
      return guarded_rec(f.child(), true);
    case Kind::Sharp:
      for (const auto& a : f.args())
        if (!guarded_rec(a, under)) return false;
      return true;
  }
  return false;
}

}  // namespace

bool guarded_def(const Formula& body) { return guarded_rec(body, false); }

// ---------------------------------------------------------------- generators

namespace {

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::vector<const Atom*> coherent_with(const ClosureContext& ctx, const Atom& a, Dir d) {
  std::vector<const Atom*> out;
  for (const Atom& b : ctx.atoms())
    if (d == Dir::F ? coherent(a, b, ctx.sigma()) : coherent(b, a, ctx.sigma())) out.push_back(&b);
  return out;
}

void mark_some(Network& n, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  for (const auto& [u, l] : n.labels())
    for (Dir d : {Dir::F, Dir::B})
      if (coin(rng) && witnesses_saturation(n, u, d)) n.mark_saturated(u, d);
}

}  // namespace

Network random_forest(const std::shared_ptr<const ClosureContext>& ctx, std::size_t max_nodes, std::mt19937_64& rng,
                      NodeId first_id) {
  Network n(ctx);
  const auto& atoms = ctx->atoms();
  const std::size_t size = std::uniform_int_distribution<std::size_t>(1, max_nodes)(rng);
  std::bernoulli_distribution attach(0.85), forward(0.5);
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < size; ++i) {
    const NodeId u = first_id + static_cast<NodeId>(i);
    if (i > 0 && attach(rng)) {
      NodeId w = pick(ids, rng);
      Dir d = forward(rng) ? Dir::F : Dir::B;
      auto cands = coherent_with(*ctx, n.label(w), d);
      if (!cands.empty()) {
        n.add_node(u, *pick(cands, rng));
        if (d == Dir::F)
          n.add_edge(w, u);
        else
          n.add_edge(u, w);
        ids.push_back(u);
        continue;
      }
    }
    n.add_node(u, pick(atoms, rng));
    ids.push_back(u);
  }
  mark_some(n, rng);
  return n;
}

Network random_dag(const std::shared_ptr<const ClosureContext>& ctx, std::size_t nodes, double p,
                   std::mt19937_64& rng) {
  Network n(ctx);
  std::bernoulli_distribution edge(p);
  for (std::size_t i = 0; i < nodes; ++i) n.add_node(static_cast<NodeId>(i), pick(ctx->atoms(), rng));
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = i + 1; j < nodes; ++j)
      if (edge(rng)) n.add_edge(static_cast<NodeId>(i), static_cast<NodeId>(j));
  return n;
}

Network grow(const Network& n, const NodeSet& allowed, Dir dir, std::size_t k, std::mt19937_64& rng,
             NodeId& next_id) {
  Network r = n;
  std::vector<NodeId> pool;
  for (auto u : allowed)
    if (!r.is_saturated(u, dir)) pool.push_back(u);
  for (std::size_t i = 0; i < k && !pool.empty(); ++i) {
    NodeId w = pick(pool, rng);
    auto cands = coherent_with(r.context(), r.label(w), dir);
    if (cands.empty()) continue;
    NodeId v = next_id++;
    r.add_node(v, *pick(cands, rng));
    if (dir == Dir::F)
      r.add_edge(w, v);
    else
      r.add_edge(v, w);
    pool.push_back(v);
  }
  return r;
}

}  // namespace flatmu::oracle
