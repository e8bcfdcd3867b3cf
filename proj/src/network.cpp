#include "flatmu/network.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace flatmu {

// ---------------------------------------------------------------- context

ClosureContext::ClosureContext(Formula root) : sigma_(root), deferrals_(sigma_) {}

const std::vector<Atom>& ClosureContext::atoms() const {
  std::call_once(atoms_once_, [this] { atoms_ = enumerate_atoms(sigma_); });
  return atoms_;
}

const std::vector<Atom>& ClosureContext::viable_atoms() const {
  std::call_once(viable_once_, [this] {
    const auto& all = atoms();
    std::vector<char> alive(all.size(), 1);
    auto witnessed = [&](std::size_t i) {
      for (Dir d : {Dir::F, Dir::B})
        for (const auto& [dia, arg] : sigma_.diamonds(d)) {
          if (!all[i].test(dia)) continue;
          bool found = false;
          for (std::size_t j = 0; j < all.size() && !found; ++j)
            found = alive[j] && all[j].test(arg) &&
                    (d == Dir::F ? coherent(all[i], all[j], sigma_) : coherent(all[j], all[i], sigma_));
          if (!found) return false;
        }
      return true;
    };
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < all.size(); ++i)
        if (alive[i] && !witnessed(i)) {
          alive[i] = 0;
          changed = true;
        }
    }
    for (std::size_t i = 0; i < all.size(); ++i)
      if (alive[i]) viable_.push_back(all[i]);
  });
  return viable_;
}

const std::vector<const Atom*>& ClosureContext::preference() const {
  std::call_once(pref_once_, [this] {
    const auto& v = viable_atoms();
    std::vector<std::size_t> demand(v.size(), 0);
    for (std::size_t i = 0; i < v.size(); ++i)
      for (Dir d : {Dir::F, Dir::B})
        for (const auto& [dia, arg] : sigma_.diamonds(d)) demand[i] += v[i].test(dia);
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return demand[a] < demand[b]; });
    for (auto i : order) pref_.push_back(&v[i]);
  });
  return pref_;
}

std::shared_ptr<const ClosureContext> make_context(Formula root) { return std::make_shared<ClosureContext>(root); }

// ---------------------------------------------------------------- network

Network::Network(std::shared_ptr<const ClosureContext> ctx) : ctx_(std::move(ctx)) {
  if (!ctx_) throw std::invalid_argument("network without closure context");
}

NodeSet Network::nodes() const {
  NodeSet out;
  for (const auto& [u, l] : labels_) out.insert(out.end(), u);
  return out;
}

std::vector<std::pair<NodeId, NodeId>> Network::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (const auto& [u, vs] : succ_)
    for (auto v : vs) out.emplace_back(u, v);
  return out;
}

std::size_t Network::edge_count() const {
  std::size_t n = 0;
  for (const auto& [u, vs] : succ_) n += vs.size();
  return n;
}

void Network::add_node(NodeId u, Atom label) {
  if (label.size() != sigma().size()) throw std::invalid_argument("label size does not match the closure");
  auto it = labels_.find(u);
  if (it != labels_.end()) {
    if (it->second != label) throw std::invalid_argument("node " + std::to_string(u) + " already has another label");
    return;
  }
  labels_.emplace(u, std::move(label));
  succ_[u];
  pred_[u];
}

void Network::add_edge(NodeId u, NodeId v) {
  if (!contains(u) || !contains(v)) throw std::invalid_argument("edge between unknown nodes");
  succ_[u].insert(v);
  pred_[v].insert(u);
}

void Network::mark_saturated(NodeId u, Dir d) {
  if (!contains(u)) throw std::invalid_argument("saturating an unknown node");
  (d == Dir::F ? sat_f_ : sat_p_).insert(u);
}

bool operator==(const Network& a, const Network& b) {
  return a.labels_ == b.labels_ && a.succ_ == b.succ_ && a.sat_f_ == b.sat_f_ && a.sat_p_ == b.sat_p_;
}

// ---------------------------------------------------------------- validation

const char* to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::Cycle:
      return "cycle";
    case Violation::Kind::NotAtom:
      return "not-atom";
    case Violation::Kind::Incoherent:
      return "incoherent-edge";
    case Violation::Kind::ForwardSaturation:
      return "forward-saturation";
    case Violation::Kind::BackwardSaturation:
      return "backward-saturation";
  }
  return "?";
}

bool is_acyclic(const Network& n) {
  std::map<NodeId, std::size_t> indeg;
  for (const auto& [u, l] : n.labels()) indeg[u] = n.predecessors(u).size();
  std::deque<NodeId> ready;
  for (const auto& [u, d] : indeg)
    if (d == 0) ready.push_back(u);
  std::size_t seen = 0;
  while (!ready.empty()) {
    NodeId u = ready.front();
    ready.pop_front();
    ++seen;
    for (auto v : n.successors(u))
      if (--indeg[v] == 0) ready.push_back(v);
  }
  return seen == n.size();
}

bool witnesses_saturation(const Network& n, NodeId u, Dir d) {
  const auto& sigma = n.sigma();
  const Atom& lu = n.label(u);
  std::vector<std::size_t> wanted;
  for (const auto& [dia_idx, arg] : sigma.diamonds(d))
    if (lu.test(dia_idx)) wanted.push_back(arg);
  if (wanted.empty()) return true;
  // neighbour label classes with their sizes
  std::vector<std::pair<const Atom*, std::size_t>> classes;
  for (auto v : n.neighbors(u, d)) {
    const Atom& lv = n.label(v);
    auto it = std::find_if(classes.begin(), classes.end(), [&](const auto& c) { return *c.first == lv; });
    if (it == classes.end())
      classes.emplace_back(&lv, 1);
    else
      ++it->second;
  }
  const std::size_t need = n.context().copies();
  std::function<bool(std::size_t)> assign = [&](std::size_t i) {
    if (i == wanted.size()) return true;
    for (auto& c : classes) {
      if (c.second >= need && c.first->test(wanted[i])) {
        c.second -= need;
        bool ok = assign(i + 1);
        c.second += need;
        if (ok) return true;
      }
    }
    return false;
  };
  return assign(0);
}

std::vector<Violation> validate(const Network& n) {
  std::vector<Violation> out;
  const auto& sigma = n.sigma();
  if (!is_acyclic(n)) out.push_back({Violation::Kind::Cycle, 0, 0, "edge relation has a cycle"});
  for (const auto& [u, l] : n.labels())
    if (!is_atom(l, sigma))
      out.push_back({Violation::Kind::NotAtom, u, 0, "label of " + std::to_string(u) + " is not an atom"});
  for (const auto& [u, v] : n.edges()) {
    if (!coherent(n.label(u), n.label(v), sigma))
      out.push_back({Violation::Kind::Incoherent, u, v,
                     "labels of " + std::to_string(u) + " -> " + std::to_string(v) + " are not coherent"});
  }
  for (auto u : n.saturated(Dir::F))
    if (!witnesses_saturation(n, u, Dir::F))
      out.push_back({Violation::Kind::ForwardSaturation, u, 0,
                     "node " + std::to_string(u) + " in S_F lacks witnessing successors"});
  for (auto u : n.saturated(Dir::B))
    if (!witnesses_saturation(n, u, Dir::B))
      out.push_back({Violation::Kind::BackwardSaturation, u, 0,
                     "node " + std::to_string(u) + " in S_P lacks witnessing predecessors"});
  return out;
}

namespace {

// Irreflexive transitive closure as (position map, reach sets over positions).
struct Reach {
  std::map<NodeId, std::size_t> pos;
  std::vector<boost::dynamic_bitset<std::uint64_t>> desc;
};

Reach reach_sets(const Network& n) {
  Reach r;
  for (const auto& [u, l] : n.labels()) r.pos.emplace(u, r.pos.size());
  r.desc.assign(r.pos.size(), boost::dynamic_bitset<std::uint64_t>(r.pos.size()));
  for (const auto& [u, i] : r.pos) {
    std::deque<NodeId> work(n.successors(u).begin(), n.successors(u).end());
    while (!work.empty()) {
      NodeId v = work.front();
      work.pop_front();
      std::size_t j = r.pos.at(v);
      if (r.desc[i].test(j)) continue;
      r.desc[i].set(j);
      for (auto w : n.successors(v)) work.push_back(w);
    }
  }
  return r;
}

}  // namespace

bool is_anticonfluent(const Network& n) {
  // Two distinct paths between the same endpoints diverge at some node whose
  // two distinct successors have a common (reflexive) descendant.
  Reach r = reach_sets(n);
  const std::size_t m = r.pos.size();
  std::vector<NodeId> ids(m);
  for (const auto& [u, i] : r.pos) ids[i] = u;
  std::vector<boost::dynamic_bitset<std::uint64_t>> below(m);
  for (std::size_t i = 0; i < m; ++i) {
    below[i] = r.desc[i];
    below[i].set(i);
  }
  for (std::size_t i = 0; i < m; ++i) {
    const auto& succ = n.successors(ids[i]);
    for (auto a = succ.begin(); a != succ.end(); ++a)
      for (auto b = std::next(a); b != succ.end(); ++b)
        if (below[r.pos.at(*a)].intersects(below[r.pos.at(*b)])) return false;
  }
  return true;
}

// ---------------------------------------------------------------- algebra

bool is_contained(const Network& a, const Network& b) {
  if (a.sigma().origin() != b.sigma().origin()) return false;
  for (const auto& [u, l] : a.labels()) {
    if (!b.contains(u) || b.label(u) != l) return false;
  }
  for (const auto& [u, l] : a.labels()) {
    for (auto v : b.successors(u))
      if (a.contains(v) && !a.has_edge(u, v)) return false;
    for (auto v : a.successors(u))
      if (!b.has_edge(u, v)) return false;
  }
  for (Dir d : {Dir::F, Dir::B})
    for (auto u : a.saturated(d))
      if (!b.is_saturated(u, d)) return false;
  return true;
}

bool is_subnetwork(const Network& a, const Network& b) {
  if (!is_contained(a, b)) return false;
  for (Dir d : {Dir::F, Dir::B})
    for (auto u : a.saturated(d))
      for (auto v : b.neighbors(u, d))
        if (!a.contains(v)) return false;
  return true;
}

Network network_union(const std::vector<Network>& parts) {
  if (parts.empty()) throw std::invalid_argument("union of no networks");
  Network out(parts.front().context_ptr());
  for (const auto& p : parts) {
    if (p.sigma().origin() != out.sigma().origin()) throw std::invalid_argument("union over different closures");
    for (const auto& [u, l] : p.labels()) {
      if (out.contains(u) && out.label(u) != l)
        throw std::invalid_argument("union: node " + std::to_string(u) + " carries different labels");
      out.add_node(u, l);
    }
  }
  for (const auto& p : parts) {
    for (const auto& [u, v] : p.edges()) out.add_edge(u, v);
    for (Dir d : {Dir::F, Dir::B})
      for (auto u : p.saturated(d)) out.mark_saturated(u, d);
  }
  return out;
}

Network restrict(const Network& n, const NodeSet& x) {
  Network out(n.context_ptr());
  for (auto u : x)
    if (n.contains(u)) out.add_node(u, n.label(u));
  for (auto u : x) {
    if (!n.contains(u)) continue;
    for (auto v : n.successors(u))
      if (out.contains(v)) out.add_edge(u, v);
    for (Dir d : {Dir::F, Dir::B})
      if (n.is_saturated(u, d)) out.mark_saturated(u, d);
  }
  return out;
}

Network complement(const Network& n, const NodeSet& x) {
  NodeSet keep;
  for (const auto& [u, l] : n.labels())
    if (!x.count(u)) keep.insert(u);
  return restrict(n, keep);
}

namespace {

NodeSet generate(const Network& n, const NodeSet& x, Dir d) {
  NodeSet out;
  std::deque<NodeId> work;
  for (auto u : x)
    if (n.contains(u) && out.insert(u).second) work.push_back(u);
  while (!work.empty()) {
    NodeId u = work.front();
    work.pop_front();
    for (auto v : n.neighbors(u, d))
      if (out.insert(v).second) work.push_back(v);
  }
  return out;
}

bool cofinal(const Network& a, const Network& b, Dir d) {
  if (!is_contained(a, b)) return false;
  for (auto v : generate(b, a.nodes(), d))
    if (!a.contains(v)) return false;
  return true;
}

}  // namespace

NodeSet upgen(const Network& n, const NodeSet& x) { return generate(n, x, Dir::F); }
NodeSet downgen(const Network& n, const NodeSet& x) { return generate(n, x, Dir::B); }

bool equp(const Network& a, const Network& b, const NodeSet& x) {
  return complement(a, upgen(a, x)) == complement(b, upgen(b, x));
}

bool eqdown(const Network& a, const Network& b, const NodeSet& x) {
  return complement(a, downgen(a, x)) == complement(b, downgen(b, x));
}

bool is_up_cofinal(const Network& a, const Network& b) { return cofinal(a, b, Dir::F); }
bool is_down_cofinal(const Network& a, const Network& b) { return cofinal(a, b, Dir::B); }

Network amalgamate(const Network& base, const std::vector<std::pair<NodeId, Network>>& parts, Dir dir) {
  if (parts.empty()) throw AmalgamationError("amalgamate: no extensions given");
  const bool fwd = dir == Dir::F;
  auto gen = [&](const Network& n, NodeId u) { return fwd ? upgen(n, {u}) : downgen(n, {u}); };
  NodeSet attach;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& [u, ni] = parts[i];
    const std::string tag = " (extension " + std::to_string(i) + " at node " + std::to_string(u) + ")";
    if (!base.contains(u)) throw AmalgamationError("amalgamate: attachment node not in the base" + tag);
    if (!is_subnetwork(base, ni)) throw AmalgamationError("amalgamate precondition: base ⊑ N_i fails" + tag);
    if (!is_anticonfluent(ni)) throw AmalgamationError("amalgamate precondition: N_i is not anticonfluent" + tag);
    bool same = fwd ? equp(base, ni, u) : eqdown(base, ni, u);
    if (!same)
      throw AmalgamationError(std::string("amalgamate precondition: base ") + (fwd ? "≡↑" : "≡↓") + " N_i fails" + tag);
    bool cof = fwd ? is_down_cofinal(base, ni) : is_up_cofinal(base, ni);
    if (!cof)
      throw AmalgamationError(std::string("amalgamate precondition: base is not ") + (fwd ? "downwards" : "upwards") +
                              " cofinal in N_i" + tag);
    attach.insert(u);
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    NodeSet gi = gen(parts[i].second, parts[i].first);
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      NodeSet gj = gen(parts[j].second, parts[j].first);
      for (auto v : gi)
        if (gj.count(v))
          throw AmalgamationError(std::string("amalgamate precondition: ") + (fwd ? "upgen" : "downgen") +
                                  " sets of extensions " + std::to_string(i) + " and " + std::to_string(j) +
                                  " overlap at node " + std::to_string(v));
    }
  }

  std::vector<Network> ns;
  for (const auto& [u, ni] : parts) ns.push_back(ni);
  Network out = network_union(ns);

  if (!is_anticonfluent(out)) throw AmalgamationError("amalgamate postcondition: result is not anticonfluent");
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (!is_subnetwork(parts[i].second, out))
      throw AmalgamationError("amalgamate postcondition: N_" + std::to_string(i) + " ⊑ result fails");
  if (!(fwd ? is_down_cofinal(base, out) : is_up_cofinal(base, out)))
    throw AmalgamationError("amalgamate postcondition: base cofinality lost");
  if (!(fwd ? equp(base, out, attach) : eqdown(base, out, attach)))
    throw AmalgamationError("amalgamate postcondition: base outside the attachment cones changed");
  return out;
}

// ---------------------------------------------------------------- timeouts

bool is_active(const Network& n, NodeId u, std::size_t deferral) {
  return n.label(u).test(n.context().deferrals().at(deferral).inst);
}

TimeoutTable compute_timeouts(const Network& n) {
  TimeoutTable table;
  const DeferralTable& dt = n.context().deferrals();
  const std::size_t d = dt.size();
  if (d == 0 || n.size() == 0) return table;

  std::vector<NodeId> ids;
  std::map<NodeId, std::size_t> pos;
  for (const auto& [u, l] : n.labels()) {
    pos.emplace(u, ids.size());
    ids.push_back(u);
  }
  const std::size_t m = ids.size();
  // children are strict subformulas, so increasing body size is a valid order
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dt.at(a).body.size() < dt.at(b).body.size(); });

  using Level = std::vector<std::vector<char>>;  // [deferral][node position]
  Level prev(d, std::vector<char>(m, 0)), cur = prev;
  std::vector<std::vector<std::optional<std::size_t>>> timeout(d, std::vector<std::optional<std::size_t>>(m));

  auto ok = [&](const Deferral::Ref& r, std::size_t t) {
    if (!n.label(ids[t]).test(r.inst)) return false;
    return r.deferral < 0 || cur[r.deferral][t] != 0;
  };

  const std::size_t cap = m * d + 1;
  for (std::size_t k = 0; k <= cap; ++k) {
    for (auto& row : cur) std::fill(row.begin(), row.end(), 0);
    for (std::size_t id : order) {
      const Deferral& df = dt.at(id);
      for (std::size_t i = 0; i < m; ++i) {
        const NodeId u = ids[i];
        const Atom& l = n.label(u);
        if (!l.test(df.inst)) continue;
        bool fin = false;
        switch (df.kind) {
          case ViewNode::Kind::Leaf:
            break;
          case ViewNode::Kind::X:
            fin = l.test(df.bot_unfold) || (k > 0 && prev[df.root][i]);
            break;
          case ViewNode::Kind::Or:
            for (const auto& c : df.children) fin = fin || ok(c, i);
            break;
          case ViewNode::Kind::And:
            fin = l.test(df.theta) && ok(df.children[0], i);
            break;
          case ViewNode::Kind::Dia:
            if (n.is_saturated(u, df.dir))
              for (auto t : n.neighbors(u, df.dir)) fin = fin || ok(df.children[0], pos.at(t));
            break;
          case ViewNode::Kind::Box: {
            if (l.test(df.box_bottom)) {
              fin = true;
              break;
            }
            const auto& nb = n.neighbors(u, df.dir);
            if (!n.is_saturated(u, df.dir) || nb.empty()) break;
            fin = true;
            for (auto t : nb) fin = fin && ok(df.children[0], pos.at(t));
            break;
          }
          case ViewNode::Kind::Nabla: {
            if (!n.is_saturated(u, df.dir)) break;
            const auto& nb = n.neighbors(u, df.dir);
            fin = true;
            for (auto t : nb) {
              bool some = false;
              for (const auto& c : df.children) some = some || ok(c, pos.at(t));
              fin = fin && some;
            }
            for (const auto& c : df.children) {
              bool some = false;
              for (auto t : nb) some = some || ok(c, pos.at(t));
              fin = fin && some;
            }
            break;
          }
        }
        if (fin) {
          cur[id][i] = 1;
          if (!timeout[id][i]) timeout[id][i] = k;
        }
      }
    }
    bool stable = k > 0 && cur == prev;
    std::swap(prev, cur);
    if (stable) break;
  }

  for (std::size_t id = 0; id < d; ++id)
    for (std::size_t i = 0; i < m; ++i)
      if (n.label(ids[i]).test(dt.at(id).inst)) table.emplace(std::make_pair(ids[i], id), timeout[id][i]);
  return table;
}

// ---------------------------------------------------------------- defects

const char* to_string(Defect::Kind k) {
  switch (k) {
    case Defect::Kind::DiaF:
      return "diaF";
    case Defect::Kind::DiaB:
      return "diaB";
    case Defect::Kind::Mu:
      return "mu";
  }
  return "?";
}

std::vector<Defect> find_defects(const Network& n, const TimeoutTable& t) {
  std::vector<Defect> out;
  for (const auto& [u, l] : n.labels()) {
    if (!n.is_saturated(u, Dir::F)) out.push_back({Defect::Kind::DiaF, u, 0});
    if (!n.is_saturated(u, Dir::B)) out.push_back({Defect::Kind::DiaB, u, 0});
    for (auto it = t.lower_bound({u, 0}); it != t.end() && it->first.first == u; ++it)
      if (!it->second) out.push_back({Defect::Kind::Mu, u, it->first.second});
  }
  return out;
}

std::vector<Defect> find_defects(const Network& n) { return find_defects(n, compute_timeouts(n)); }

}  // namespace flatmu
