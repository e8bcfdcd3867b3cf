#include "flatmu/closure.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace flatmu {

bool atom_less(const Atom& a, const Atom& b) {
  auto pa = a.find_first();
  auto pb = b.find_first();
  while (pa != Atom::npos && pa == pb) {
    pa = a.find_next(pa);
    pb = b.find_next(pb);
  }
  if (pa == pb) return false;  // equal (both npos)
  // The smaller first-differing index is present in one set only.
  if (pa == Atom::npos) return true;
  if (pb == Atom::npos) return false;
  return pa > pb;
}

std::size_t atom_hash(const Atom& a) {
  std::vector<std::uint64_t> blocks;
  boost::to_block_range(a, std::back_inserter(blocks));
  std::size_t h = a.size();
  for (auto b : blocks) h = (h ^ b) * 0x100000001b3ULL + (h >> 7);
  return h;
}

std::vector<std::size_t> members(const Atom& a) {
  std::vector<std::size_t> out;
  for (auto i = a.find_first(); i != Atom::npos; i = a.find_next(i)) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------- closure

namespace {

std::map<std::string, Formula> unfold_map(const Formula& host, const Formula& x_value) {
  std::map<std::string, Formula> m{{kRecVar, x_value}};
  auto args = host.args();
  for (std::size_t i = 0; i < args.size(); ++i) m.emplace(param_name(i + 1), args[i]);
  return m;
}

}  // namespace

ClosureSet::ClosureSet(Formula origin) : origin_(origin) {
  std::deque<Formula> work;
  auto add = [&](const Formula& f) {
    if (index_.emplace(f.id(), formulas_.size()).second) {
      formulas_.push_back(f);
      work.push_back(f);
    }
  };
  add(origin);
  add(box(Dir::F, bottom()));
  add(box(Dir::B, bottom()));
  while (!work.empty()) {
    Formula f = work.front();
    work.pop_front();
    switch (f.kind()) {
      case Kind::Neg:
      case Kind::DiaF:
      case Kind::DiaB:
        add(f.child());
        break;
      case Kind::Or:
        add(f.left());
        add(f.right());
        break;
      case Kind::Sharp:
        for (const auto& a : f.args()) add(a);
        break;
      default:
        break;
    }
    if (f.kind() != Kind::Neg) add(neg(f));
    if (f.kind() == Kind::Sharp) {
      const Formula& body = f.connective().body;
      add(substitute(body, unfold_map(f, f)));
      add(substitute(body, unfold_map(f, bottom())));
    }
  }

  entries_.resize(formulas_.size());
  for (std::size_t i = 0; i < formulas_.size(); ++i) {
    const Formula& f = formulas_[i];
    Entry& e = entries_[i];
    e.kind = f.kind();
    e.comp = index(complement(f));
    switch (f.kind()) {
      case Kind::Neg:
        e.a = static_cast<int>(index(f.child()));
        break;
      case Kind::DiaF:
      case Kind::DiaB:
        e.a = static_cast<int>(index(f.child()));
        (f.kind() == Kind::DiaF ? dias_f_ : dias_b_).emplace_back(i, e.a);
        break;
      case Kind::Or:
        e.a = static_cast<int>(index(f.left()));
        e.b = static_cast<int>(index(f.right()));
        break;
      case Kind::Sharp:
        e.unfold = static_cast<int>(index(substitute(f.connective().body, unfold_map(f, f))));
        e.bot_unfold = static_cast<int>(index(substitute(f.connective().body, unfold_map(f, bottom()))));
        sharps_.push_back(i);
        break;
      default:
        break;
    }
  }
  bottom_ = index(bottom());
  top_ = index(top());
  box_bottom_f_ = index(box(Dir::F, bottom()));
  box_bottom_b_ = index(box(Dir::B, bottom()));
  bottom_up_.resize(formulas_.size());
  for (std::size_t i = 0; i < bottom_up_.size(); ++i) bottom_up_[i] = i;
  std::stable_sort(bottom_up_.begin(), bottom_up_.end(),
                   [&](std::size_t a, std::size_t b) { return formulas_[a].size() < formulas_[b].size(); });
}

std::optional<std::size_t> ClosureSet::index_of(const Formula& f) const {
  auto it = index_.find(f.id());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ClosureSet::index(const Formula& f) const {
  auto it = index_.find(f.id());
  if (it == index_.end()) throw std::out_of_range("formula not in closure: " + print(f));
  return it->second;
}

// ---------------------------------------------------------------- atoms

bool is_atom(const Atom& a, const ClosureSet& sigma) {
  if (a.size() != sigma.size()) return false;
  if (a.test(sigma.bottom_index())) return false;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const auto& e = sigma.entry(i);
    if (a.test(i) == a.test(e.comp)) return false;
    if (e.kind == Kind::Or && a.test(i) != (a.test(e.a) || a.test(e.b))) return false;
    if (e.kind == Kind::Sharp && a.test(i) != a.test(e.unfold)) return false;
  }
  return true;
}

namespace {

class AtomEnumerator {
 public:
  explicit AtomEnumerator(const ClosureSet& sigma) : sigma_(sigma), pos_(sigma.size(), -1) {
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      Kind k = sigma.entry(i).kind;
      if (k == Kind::Var || k == Kind::DiaF || k == Kind::DiaB || k == Kind::Sharp) {
        pos_[i] = static_cast<int>(base_.size());
        base_.push_back(i);
      }
    }
    if (base_.size() > kMaxAtomBase)
      throw std::length_error("closure has " + std::to_string(base_.size()) +
                              " independent members; atom enumeration is capped at " + std::to_string(kMaxAtomBase));
    // Each ♯ constraint is checked as soon as every base member it reads is fixed.
    checks_.resize(base_.size());
    for (auto s : sigma.sharps()) {
      int ready = pos_[s];
      ready = std::max(ready, support(static_cast<std::size_t>(sigma.entry(s).unfold)));
      checks_[ready].push_back(s);
    }
    value_.assign(base_.size(), false);
  }

  void run(const std::function<void(const Atom&)>& fn) { descend(0, fn); }

 private:
  int support(std::size_t i) const {
    const auto& e = sigma_.entry(i);
    switch (e.kind) {
      case Kind::Bottom:
        return -1;
      case Kind::Neg:
        return support(e.a);
      case Kind::Or:
        return std::max(support(e.a), support(e.b));
      default:
        return pos_[i];
    }
  }

  bool eval(std::size_t i) const {
    const auto& e = sigma_.entry(i);
    switch (e.kind) {
      case Kind::Bottom:
        return false;
      case Kind::Neg:
        return !eval(e.a);
      case Kind::Or:
        return eval(e.a) || eval(e.b);
      default:
        return value_[pos_[i]];
    }
  }

  void descend(std::size_t k, const std::function<void(const Atom&)>& fn) {
    if (k == base_.size()) {
      Atom a = sigma_.empty_set();
      for (std::size_t i : sigma_.bottom_up()) {
        const auto& e = sigma_.entry(i);
        bool v = false;
        switch (e.kind) {
          case Kind::Bottom:
            v = false;
            break;
          case Kind::Neg:
            v = !a.test(e.a);
            break;
          case Kind::Or:
            v = a.test(e.a) || a.test(e.b);
            break;
          default:
            v = value_[pos_[i]];
        }
        a.set(i, v);
      }
      fn(a);
      return;
    }
    for (bool v : {false, true}) {
      value_[k] = v;
      bool ok = true;
      for (auto s : checks_[k]) {
        if (eval(s) != eval(sigma_.entry(s).unfold)) {
          ok = false;
          break;
        }
      }
      if (ok) descend(k + 1, fn);
    }
  }

  const ClosureSet& sigma_;
  std::vector<int> pos_;
  std::vector<std::size_t> base_;
  std::vector<std::vector<std::size_t>> checks_;
  std::vector<bool> value_;
};

}  // namespace

void for_each_atom(const ClosureSet& sigma, const std::function<void(const Atom&)>& fn) {
  AtomEnumerator(sigma).run(fn);
}

std::vector<Atom> enumerate_atoms(const ClosureSet& sigma) {
  std::vector<Atom> out;
  for_each_atom(sigma, [&](const Atom& a) { out.push_back(a); });
  std::sort(out.begin(), out.end(), atom_less);
  return out;
}

bool coherent(const Atom& a, const Atom& b, const ClosureSet& sigma) {
  for (const auto& [d, arg] : sigma.diamonds(Dir::F))
    if (b.test(arg) && !a.test(d)) return false;
  for (const auto& [d, arg] : sigma.diamonds(Dir::B))
    if (a.test(arg) && !b.test(d)) return false;
  return true;
}

// ---------------------------------------------------------------- deferrals

DeferralTable::DeferralTable(const ClosureSet& sigma) {
  for (std::size_t host : sigma.sharps()) {
    const Formula& h = sigma.at(host);
    const Connective& c = h.connective();
    if (!c.view)
      throw std::invalid_argument("connective " + c.name + " is not disjunctive; no deferral table for it");
    const DisjunctiveView& v = *c.view;
    auto inst_map = unfold_map(h, h);
    const std::size_t base = entries_.size();
    std::map<int, int> id_of;  // view node -> deferral id
    for (std::size_t k = 0; k < v.preorder.size(); ++k) id_of[v.preorder[k]] = static_cast<int>(base + k);
    auto inst = [&](const Formula& f) { return sigma.index(substitute(f, inst_map)); };
    for (int vn : v.preorder) {
      const ViewNode& n = v.nodes[vn];
      Deferral d;
      d.host = host;
      d.view_node = vn;
      d.kind = n.kind;
      d.dir = v.dir;
      d.body = n.src;
      d.inst = inst(n.src);
      for (int ch : n.children) {
        Deferral::Ref r;
        auto it = id_of.find(ch);
        r.deferral = it == id_of.end() ? -1 : it->second;
        r.inst = inst(v.nodes[ch].src);
        d.children.push_back(r);
      }
      if (n.kind == ViewNode::Kind::And) d.theta = inst(n.theta);
      if (n.kind == ViewNode::Kind::X) {
        d.bot_unfold = static_cast<std::size_t>(sigma.entry(host).bot_unfold);
        d.root = id_of.at(v.root);
      }
      d.box_bottom = sigma.box_bottom(v.dir);
      entries_.push_back(std::move(d));
    }
  }
}

std::vector<std::size_t> DeferralTable::hosted_by(std::size_t host) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].host == host) out.push_back(i);
  return out;
}

}  // namespace flatmu
