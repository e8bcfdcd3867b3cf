#include "flatmu/construct.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace flatmu {

const char* to_string(StuckReason r) {
  switch (r) {
    case StuckReason::NoCoherentAtom: return "no-coherent-atom";
    case StuckReason::TreeSearchFailed: return "tree-search-failed";
    case StuckReason::Budget: return "budget";
  }
  return "?";
}

const char* to_string(ConstructionReport::Verdict v) {
  switch (v) {
    case ConstructionReport::Verdict::Perfect: return "perfect";
    case ConstructionReport::Verdict::PerfectUpToRadius: return "perfect-up-to-radius";
    case ConstructionReport::Verdict::Stuck: return "stuck";
  }
  return "?";
}

std::map<NodeId, std::size_t> distances_from(const Network& n, NodeId root) {
  std::map<NodeId, std::size_t> dist;
  if (!n.contains(root)) return dist;
  std::deque<NodeId> q{root};
  dist[root] = 0;
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop_front();
    for (Dir d : {Dir::F, Dir::B})
      for (auto v : n.neighbors(u, d))
        if (dist.emplace(v, dist[u] + 1).second) q.push_back(v);
  }
  return dist;
}

namespace {

Defect dia_defect(NodeId u, Dir d) { return {d == Dir::F ? Defect::Kind::DiaF : Defect::Kind::DiaB, u, 0}; }
Defect mu_defect(NodeId u, std::size_t id) { return {Defect::Kind::Mu, u, id}; }

bool finished_in(const TimeoutTable& t, NodeId u, std::size_t id) {
  auto it = t.find({u, id});
  return it != t.end() && it->second.has_value();
}

}  // namespace

Constructor::Constructor(std::shared_ptr<const ClosureContext> ctx, Budget budget)
    : ctx_(std::move(ctx)), budget_(budget) {}

void Constructor::reserve_ids(const Network& n) { next_ = std::max(next_, n.next_id()); }

void Constructor::check_budget(const Network& n, const Defect& d) const {
  if (n.size() > budget_.max_nodes)
    throw Stuck(StuckReason::Budget, d,
                "node budget of " + std::to_string(budget_.max_nodes) + " exceeded while repairing node " +
                    std::to_string(d.node));
}

bool Constructor::finished(const Network& n, NodeId u, std::size_t deferral) const {
  return finished_in(compute_timeouts(n), u, deferral);
}

std::vector<const Atom*> Constructor::candidates(const Atom& from, std::size_t phi, Dir d) const {
  std::vector<const Atom*> out;
  const auto& sigma = ctx_->sigma();
  for (const Atom* b : ctx_->preference()) {
    if (!b->test(phi)) continue;
    if (d == Dir::F ? coherent(from, *b, sigma) : coherent(*b, from, sigma)) out.push_back(b);
  }
  return out;
}

Network Constructor::saturate(const Network& n, NodeId u, Dir d) {
  reserve_ids(n);
  if (n.is_saturated(u, d)) return n;
  Network r = n;
  // Neighbours already witnessing every diamond are reused as they are.
  if (!witnesses_saturation(n, u, d)) {
    const Atom lu = n.label(u);
    for (const auto& [dia, arg] : ctx_->sigma().diamonds(d)) {
      if (!lu.test(dia)) continue;
      auto cands = candidates(lu, arg, d);
      if (cands.empty())
        throw Stuck(StuckReason::NoCoherentAtom, dia_defect(u, d),
                    "no coherent atom for " + print(ctx_->sigma().at(dia)) + " at node " + std::to_string(u));
      for (std::size_t c = 0; c < ctx_->copies(); ++c) {
        NodeId v = fresh();
        r.add_node(v, *cands.front());
        if (d == Dir::F)
          r.add_edge(u, v);
        else
          r.add_edge(v, u);
      }
    }
  }
  r.mark_saturated(u, d);
  return r;
}

Network Constructor::normalize_heads(const Network& n, Dir d) {
  reserve_ids(n);
  Network r = n;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [u, l] : r.labels()) {
      if (r.is_saturated(u, d) || r.neighbors(u, d).empty()) continue;
      r = saturate(r, u, d);
      check_budget(r, dia_defect(u, d));
      changed = true;
      break;
    }
  }
  return r;
}

// ---------------------------------------------------------------- tree search

std::optional<Constructor::Tree> Constructor::child_tree(const Atom& b, const Deferral::Ref& ref, std::size_t depth) {
  if (!b.test(ref.inst)) return std::nullopt;
  if (ref.deferral < 0) return Tree{{Tree::Node{b, false, {}}}};
  return tree_search(b, static_cast<std::size_t>(ref.deferral), depth);
}

bool Constructor::leaf_ok(const Deferral::Ref& r, const Atom& b) const { return r.deferral < 0 && b.test(r.inst); }

std::optional<Constructor::Tree> Constructor::tree_search(const Atom& a, std::size_t deferral, std::size_t depth) {
  MemoKey key{a, deferral};
  auto& m = memo_[key];
  if (m.success && m.success_depth <= depth) return m.success;
  if (m.failed_depth >= static_cast<long>(depth)) return std::nullopt;
  for (const auto& [id, atom] : in_progress_)
    if (id == deferral && atom == a) {
      cut_ = true;
      return std::nullopt;
    }
  in_progress_.emplace_back(deferral, a);
  const bool outer_cut = cut_;
  cut_ = false;
  auto r = tree_search_uncached(a, deferral, depth);
  in_progress_.pop_back();
  const bool was_cut = cut_;
  cut_ = outer_cut || was_cut;
  auto& slot = memo_[key];  // rehash may have moved m
  if (r) {
    if (!slot.success || slot.success_depth > depth) {
      slot.success = r;
      slot.success_depth = depth;
    }
  } else if (!was_cut) {
    slot.failed_depth = std::max(slot.failed_depth, static_cast<long>(depth));
  }
  return r;
}

std::optional<Constructor::Tree> Constructor::tree_search_uncached(const Atom& a, std::size_t deferral,
                                                                    std::size_t depth) {
  const Deferral& df = ctx_->deferrals().at(deferral);
  const Tree leaf{{Tree::Node{a, false, {}}}};
  if (!a.test(df.inst)) return std::nullopt;
  switch (df.kind) {
    case ViewNode::Kind::Leaf:
      return leaf;
    case ViewNode::Kind::X:
      if (a.test(df.bot_unfold)) return leaf;
      return tree_search(a, static_cast<std::size_t>(df.root), depth);
    case ViewNode::Kind::Or:
      for (const auto& c : df.children)
        if (leaf_ok(c, a)) return leaf;
      for (const auto& c : df.children)
        if (c.deferral >= 0 && a.test(c.inst))
          if (auto t = tree_search(a, static_cast<std::size_t>(c.deferral), depth)) return t;
      return std::nullopt;
    case ViewNode::Kind::And:
      if (!a.test(df.theta)) return std::nullopt;
      return child_tree(a, df.children[0], depth);
    case ViewNode::Kind::Box:
      if (a.test(df.box_bottom)) return leaf;
      break;
    case ViewNode::Kind::Dia:
    case ViewNode::Kind::Nabla:
      break;
  }
  if (depth == 0) return std::nullopt;

  // Saturate the root: copies children per diamond, each subtree chosen so the
  // modal clause holds at the root.
  const Dir d = df.dir;
  const std::size_t copies = ctx_->copies();
  Tree out{{Tree::Node{a, true, {}}}};
  auto append = [&](const Tree& t) {
    const std::size_t off = out.nodes.size();
    for (const auto& node : t.nodes) {
      Tree::Node c = node;
      for (auto& ch : c.children) ch += off;
      out.nodes.push_back(std::move(c));
    }
    out.nodes[0].children.push_back(off);
  };
  auto any_elem = [&](const Atom& b) -> std::optional<Tree> {
    for (const auto& e : df.children)
      if (leaf_ok(e, b)) return Tree{{Tree::Node{b, false, {}}}};
    for (const auto& e : df.children)
      if (e.deferral >= 0 && b.test(e.inst))
        if (auto t = child_tree(b, e, depth - 1)) return t;
    return std::nullopt;
  };

  bool dia_done = false;
  for (const auto& [dia, arg] : ctx_->sigma().diamonds(d)) {
    if (!a.test(dia)) continue;
    std::vector<Deferral::Ref> own;  // elements whose instantiation is arg
    if (df.kind != ViewNode::Kind::Box)
      for (const auto& e : df.children)
        if (e.inst == arg) own.push_back(e);
    if (df.kind == ViewNode::Kind::Nabla && own.size() > copies) return std::nullopt;
    std::optional<std::vector<Tree>> chosen;
    for (const Atom* b : candidates(a, arg, d)) {
      std::vector<Tree> subs;
      const Tree bare{{Tree::Node{*b, false, {}}}};
      bool good = true;
      for (std::size_t c = 0; c < copies && good; ++c) {
        std::optional<Tree> t;
        switch (df.kind) {
          case ViewNode::Kind::Dia:
            t = (!own.empty() && c == 0 && !dia_done) ? child_tree(*b, own[0], depth - 1) : bare;
            break;
          case ViewNode::Kind::Box:
            t = child_tree(*b, df.children[0], depth - 1);
            break;
          case ViewNode::Kind::Nabla:
            t = own.empty() ? any_elem(*b) : child_tree(*b, own[c % own.size()], depth - 1);
            break;
          default:
            break;
        }
        if (t)
          subs.push_back(std::move(*t));
        else
          good = false;
      }
      if (good) {
        chosen = std::move(subs);
        break;
      }
    }
    if (!chosen) return std::nullopt;
    if (df.kind == ViewNode::Kind::Dia && arg == df.children[0].inst) dia_done = true;
    for (const auto& t : *chosen) append(t);
  }
  if (out.nodes[0].children.empty()) return std::nullopt;
  return out;
}

Network Constructor::graft(const Network& n, NodeId u, const Tree& t, Dir d) {
  Network r = n;
  std::vector<NodeId> ids(t.nodes.size());
  ids[0] = u;
  for (std::size_t i = 1; i < t.nodes.size(); ++i) {
    ids[i] = fresh();
    r.add_node(ids[i], t.nodes[i].label);
  }
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    for (auto c : t.nodes[i].children) {
      if (d == Dir::F)
        r.add_edge(ids[i], ids[c]);
      else
        r.add_edge(ids[c], ids[i]);
    }
    if (t.nodes[i].saturated) r.mark_saturated(ids[i], d);
  }
  return r;
}

// ---------------------------------------------------------------- finishing

Network Constructor::fin(const Network& n, NodeId u, std::size_t deferral,
                         std::vector<std::pair<NodeId, std::size_t>>& stack) {
  const TimeoutTable tt = compute_timeouts(n);
  if (finished_in(tt, u, deferral)) return n;
  const Defect defect = mu_defect(u, deferral);
  if (std::find(stack.begin(), stack.end(), std::make_pair(u, deferral)) != stack.end())
    throw Stuck(StuckReason::TreeSearchFailed, defect, "unguarded cycle while finishing deferral " +
                                                           std::to_string(deferral) + " at node " + std::to_string(u));
  stack.emplace_back(u, deferral);
  const Deferral& df = ctx_->deferrals().at(deferral);
  const Atom& lu = n.label(u);
  auto ok = [&](const Deferral::Ref& r, NodeId t) {
    return n.label(t).test(r.inst) && (r.deferral < 0 || finished_in(tt, t, static_cast<std::size_t>(r.deferral)));
  };
  auto fail = [&](const std::string& why) -> Stuck {
    return Stuck(StuckReason::TreeSearchFailed, defect,
                 "cannot finish deferral " + std::to_string(deferral) + " at node " + std::to_string(u) + ": " + why);
  };

  std::optional<Network> result;
  switch (df.kind) {
    case ViewNode::Kind::Leaf:
      result = n;
      break;
    case ViewNode::Kind::X:
      result = fin(n, u, static_cast<std::size_t>(df.root), stack);
      break;
    case ViewNode::Kind::And:
      result = fin(n, u, static_cast<std::size_t>(df.children[0].deferral), stack);
      break;
    case ViewNode::Kind::Or: {
      std::optional<Stuck> last;
      for (const auto& c : df.children) {
        if (c.deferral < 0 || !lu.test(c.inst)) continue;
        try {
          result = fin(n, u, static_cast<std::size_t>(c.deferral), stack);
          break;
        } catch (const Stuck& s) {
          if (s.reason() == StuckReason::Budget) throw;
          last = s;
        }
      }
      if (!result) throw last ? *last : fail("no disjunct holds");
      break;
    }
    case ViewNode::Kind::Dia:
    case ViewNode::Kind::Box:
    case ViewNode::Kind::Nabla: {
      const Dir d = df.dir;
      const auto& nb = n.neighbors(u, d);
      if (nb.empty()) {
        if (n.is_saturated(u, d)) throw fail("saturated node without neighbours");
        auto t = tree_search(lu, deferral, budget_.max_depth);
        if (!t) throw fail("no witnessing tree within depth " + std::to_string(budget_.max_depth));
        result = graft(n, u, *t, d);
        break;
      }
      if (!n.is_saturated(u, d)) throw std::logic_error("finish_deferral: heads were not normalized");
      std::vector<std::pair<NodeId, Network>> parts;
      if (df.kind == ViewNode::Kind::Dia) {
        std::optional<Stuck> last;
        for (auto t : nb) {
          if (!n.label(t).test(df.children[0].inst)) continue;
          try {
            result = fin(n, t, static_cast<std::size_t>(df.children[0].deferral), stack);
            break;
          } catch (const Stuck& s) {
            if (s.reason() == StuckReason::Budget) throw;
            last = s;
          }
        }
        if (!result) throw last ? *last : fail("no neighbour carries the diamond argument");
        break;
      }
      // Assign each neighbour one element; every element must be hit.
      std::map<NodeId, std::size_t> f;
      if (df.kind == ViewNode::Kind::Box) {
        for (auto t : nb) f[t] = 0;
      } else {
        const auto& el = df.children;
        std::vector<NodeId> ts(nb.begin(), nb.end());
        std::map<NodeId, std::size_t> match_t;  // neighbour -> element
        std::vector<int> match_e(el.size(), -1);
        std::function<bool(std::size_t, std::vector<char>&)> augment = [&](std::size_t e, std::vector<char>& seen) {
          for (std::size_t j = 0; j < ts.size(); ++j) {
            if (seen[j] || !n.label(ts[j]).test(el[e].inst)) continue;
            seen[j] = 1;
            auto it = match_t.find(ts[j]);
            if (it == match_t.end() || augment(it->second, seen)) {
              match_t[ts[j]] = e;
              match_e[e] = static_cast<int>(j);
              return true;
            }
          }
          return false;
        };
        for (std::size_t e = 0; e < el.size(); ++e) {
          std::vector<char> seen(ts.size(), 0);
          if (!augment(e, seen)) throw fail("no neighbour for a cover element");
        }
        for (auto t : ts) {
          if (auto it = match_t.find(t); it != match_t.end()) {
            f[t] = it->second;
            continue;
          }
          std::optional<std::size_t> pick;
          for (std::size_t e = 0; e < el.size() && !pick; ++e)
            if (ok(el[e], t)) pick = e;
          for (std::size_t e = 0; e < el.size() && !pick; ++e)
            if (n.label(t).test(el[e].inst)) pick = e;
          if (!pick) throw fail("neighbour " + std::to_string(t) + " satisfies no cover element");
          f[t] = *pick;
        }
      }
      for (const auto& [t, e] : f) {
        const auto& ref = df.children[e];
        if (ok(ref, t)) continue;
        if (ref.deferral < 0) throw fail("neighbour " + std::to_string(t) + " lacks a required formula");
        parts.emplace_back(t, fin(n, t, static_cast<std::size_t>(ref.deferral), stack));
      }
      result = parts.empty() ? n : amalgamate(n, parts, d);
      break;
    }
  }
  stack.pop_back();
  return *result;
}

Network Constructor::finish_deferral(const Network& n, NodeId u, std::size_t deferral) {
  if (!is_active(n, u, deferral))
    throw std::invalid_argument("deferral " + std::to_string(deferral) + " is not active at node " + std::to_string(u));
  reserve_ids(n);
  if (finished(n, u, deferral)) return n;
  const Deferral& df = ctx_->deferrals().at(deferral);
  Network r = normalize_heads(n, df.dir);
  std::vector<std::pair<NodeId, std::size_t>> stack;
  r = fin(r, u, deferral, stack);
  if (!finished(r, u, deferral)) throw std::logic_error("finish_deferral left the deferral unfinished");
  return r;
}

Network Constructor::repair_all(const Network& n) {
  reserve_ids(n);
  const NodeSet inputs = n.nodes();
  Network cur = n;
  last_good_ = cur;
  auto record = [&](const Defect& d) {
    check_budget(cur, d);
    last_good_ = cur;
    if (log_) log_->push_back({round_, d, cur.size()});
  };
  for (Dir d : {Dir::F, Dir::B})
    for (auto u : inputs) {
      if (cur.is_saturated(u, d)) continue;
      cur = saturate(cur, u, d);
      record(dia_defect(u, d));
    }
  const std::size_t nd = ctx_->deferrals().size();
  TimeoutTable tt = compute_timeouts(cur);
  for (auto u : inputs)
    for (std::size_t id = 0; id < nd; ++id) {
      auto it = tt.find({u, id});
      if (it == tt.end() || it->second) continue;
      tt = compute_timeouts(cur);  // earlier repairs may have finished it
      if (finished_in(tt, u, id)) continue;
      cur = finish_deferral(cur, u, id);
      record(mu_defect(u, id));
      tt = compute_timeouts(cur);
    }
  return cur;
}

ConstructionReport Constructor::build(const Atom& atom) {
  ConstructionReport rep{Network(ctx_), atom, 0, {}, {}, ConstructionReport::Verdict::Stuck, 0, {}, {}, {}, {}, {}};
  Network n(ctx_);
  n.add_node(0, atom);
  reserve_ids(n);
  log_ = &rep.repairs;
  auto radius_of = [](const Network& net, const std::vector<Defect>& defects) -> long {
    if (defects.empty()) return static_cast<long>(net.size());
    auto dist = distances_from(net, 0);
    std::size_t best = SIZE_MAX;
    for (const auto& d : defects) best = std::min(best, dist.at(d.node));
    return static_cast<long>(best) - 1;
  };
  bool stuck = false;
  for (std::size_t round = 1; round <= budget_.max_rounds; ++round) {
    if (find_defects(n).empty()) break;
    round_ = round;
    try {
      n = repair_all(n);
      ++rep.rounds_completed;
      rep.radius_history.push_back(radius_of(n, find_defects(n)));
      rep.snapshots.push_back(n);
    } catch (const Stuck& s) {
      if (last_good_) n = *last_good_;
      rep.stuck_defect = s.defect();
      rep.stuck_reason = s.reason();
      rep.stuck_message = s.what();
      stuck = s.reason() != StuckReason::Budget;
      break;
    }
  }
  log_ = nullptr;

  const auto defects = find_defects(n);
  const auto dist = distances_from(n, 0);
  for (const auto& d : defects) rep.residual.push_back({d, dist.at(d.node)});
  if (defects.empty()) {
    rep.verdict = ConstructionReport::Verdict::Perfect;
    rep.stuck_defect.reset();
    rep.stuck_reason.reset();
    rep.stuck_message.clear();
  } else if (!stuck && radius_of(n, defects) >= 0) {
    rep.verdict = ConstructionReport::Verdict::PerfectUpToRadius;
    rep.radius = static_cast<std::size_t>(radius_of(n, defects));
  } else {
    rep.verdict = ConstructionReport::Verdict::Stuck;
    if (!rep.stuck_defect) {
      rep.stuck_defect = defects.front();
      rep.stuck_reason = StuckReason::Budget;
      rep.stuck_message = "round limit of " + std::to_string(budget_.max_rounds) + " reached with the root defective";
    }
  }
  rep.network = std::move(n);
  return rep;
}

// ---------------------------------------------------------------- wrappers

Network saturate_forward(const Network& n, NodeId u) { return Constructor(n.context_ptr()).saturate(n, u, Dir::F); }
Network saturate_backward(const Network& n, NodeId u) { return Constructor(n.context_ptr()).saturate(n, u, Dir::B); }
Network normalize_heads(const Network& n, Dir d) { return Constructor(n.context_ptr()).normalize_heads(n, d); }
Network finish_deferral(const Network& n, NodeId u, std::size_t deferral, const Budget& b) {
  return Constructor(n.context_ptr(), b).finish_deferral(n, u, deferral);
}
Network repair_all(const Network& n, const Budget& b) { return Constructor(n.context_ptr(), b).repair_all(n); }
ConstructionReport build(std::shared_ptr<const ClosureContext> ctx, const Atom& atom, const Budget& b) {
  return Constructor(std::move(ctx), b).build(atom);
}

// ---------------------------------------------------------------- models

KripkeModel extract_model(const Network& n) {
  std::map<NodeId, std::size_t> state;
  for (const auto& [u, l] : n.labels()) state.emplace(u, state.size());
  KripkeModel m{Frame(state.size())};
  for (const auto& [u, v] : n.edges()) m.frame.add_edge(state.at(u), state.at(v));
  const auto& sigma = n.sigma();
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const Formula& f = sigma.at(i);
    if (f.kind() != Kind::Var) continue;
    m.valuation[f.name()] = TruthSet(state.size());
    for (const auto& [u, l] : n.labels())
      if (l.test(i)) m.set(f.name(), state.at(u));
  }
  return m;
}

std::vector<TruthFailure> truth_lemma_failures(const Network& n, std::optional<std::size_t> radius, NodeId root) {
  std::vector<TruthFailure> out;
  if (n.size() == 0) return out;
  const auto& sigma = n.sigma();
  KripkeModel m = extract_model(n);
  std::vector<std::size_t> which;
  std::vector<Formula> fs;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const Formula& f = sigma.at(i);
    if (radius && (f.has_sharp() || modal_depth(f) > *radius)) continue;
    which.push_back(i);
    fs.push_back(f);
  }
  auto truth = eval_all(fs, m);
  std::size_t s = 0;
  for (const auto& [u, l] : n.labels()) {
    if (!radius || u == root)
      for (std::size_t k = 0; k < which.size(); ++k)
        if (l.test(which[k]) && !truth[k].test(s)) out.push_back({u, which[k]});
    ++s;
  }
  return out;
}

}  // namespace flatmu
