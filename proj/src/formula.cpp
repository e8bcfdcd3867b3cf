#include "flatmu/formula.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include "flatmu/syntax.hpp"

namespace flatmu {

namespace detail {

struct Node {
  Kind kind;
  std::string name;
  std::vector<Formula> kids;
  std::shared_ptr<const Connective> conn;
  std::size_t id = 0;
  std::size_t size = 1;
  bool has_sharp = false;
  std::vector<std::string> vars;
};

}  // namespace detail

namespace {

struct Key {
  Kind kind;
  std::string name;
  std::vector<std::size_t> kids;
  const Connective* conn;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::size_t h = std::hash<std::string>{}(k.name) ^ (static_cast<std::size_t>(k.kind) * 0x9e3779b97f4a7c15ULL);
    for (auto c : k.kids) h = (h ^ c) * 0x100000001b3ULL;
    h ^= std::hash<const void*>{}(k.conn);
    return h;
  }
};

struct Store {
  std::mutex mu;
  std::deque<detail::Node> nodes;
  std::unordered_map<Key, const detail::Node*, KeyHash> index;
};

Store& store() {
  static Store* s = new Store;  // intentionally leaked, formulas are process-lifetime
  return *s;
}

}  // namespace

Formula make_node(Kind kind, std::string name, std::vector<Formula> kids, std::shared_ptr<const Connective> conn) {
  Key key{kind, name, {}, conn.get()};
  key.kids.reserve(kids.size());
  for (const auto& k : kids) key.kids.push_back(k.id());

  Store& s = store();
  std::lock_guard lock(s.mu);
  if (auto it = s.index.find(key); it != s.index.end()) return Formula(it->second);

  detail::Node& n = s.nodes.emplace_back();
  n.kind = kind;
  n.name = std::move(name);
  n.conn = std::move(conn);
  n.id = s.nodes.size() - 1;
  n.has_sharp = kind == Kind::Sharp;
  if (kind == Kind::Var) n.vars.push_back(n.name);
  for (const auto& k : kids) {
    n.size += k.size();
    n.has_sharp = n.has_sharp || k.has_sharp();
    const auto& kv = k.variables();
    std::vector<std::string> merged;
    std::set_union(n.vars.begin(), n.vars.end(), kv.begin(), kv.end(), std::back_inserter(merged));
    n.vars = std::move(merged);
  }
  n.kids = std::move(kids);
  s.index.emplace(std::move(key), &n);
  return Formula(&n);
}

Formula::Formula() : Formula(bottom()) {}

Kind Formula::kind() const { return node_->kind; }
const std::string& Formula::name() const { return node_->name; }
Formula Formula::child() const { return node_->kids.at(0); }
Formula Formula::left() const { return node_->kids.at(0); }
Formula Formula::right() const { return node_->kids.at(1); }
const Connective& Formula::connective() const { return *node_->conn; }
const std::shared_ptr<const Connective>& Formula::connective_ptr() const { return node_->conn; }
std::span<const Formula> Formula::args() const { return node_->kids; }
std::size_t Formula::id() const { return node_->id; }
std::size_t Formula::size() const { return node_->size; }
const std::vector<std::string>& Formula::variables() const { return node_->vars; }
bool Formula::has_sharp() const { return node_->has_sharp; }

bool Formula::mentions(std::string_view v) const {
  return std::binary_search(node_->vars.begin(), node_->vars.end(), v);
}

bool operator<(const Formula& a, const Formula& b) { return a.id() < b.id(); }

Formula bottom() {
  static const Formula b = make_node(Kind::Bottom, "", {}, nullptr);
  return b;
}

Formula var(std::string name) { return make_node(Kind::Var, std::move(name), {}, nullptr); }
Formula neg(Formula f) { return make_node(Kind::Neg, "", {f}, nullptr); }
Formula lor(Formula a, Formula b) { return make_node(Kind::Or, "", {a, b}, nullptr); }
Formula dia(Dir d, Formula f) { return make_node(d == Dir::F ? Kind::DiaF : Kind::DiaB, "", {f}, nullptr); }

Formula sharp(std::shared_ptr<const Connective> c, std::vector<Formula> args) {
  if (!c) throw std::invalid_argument("sharp: null connective");
  if (args.size() != c->arity)
    throw std::invalid_argument("sharp: connective " + c->name + " expects " + std::to_string(c->arity) +
                                " arguments, got " + std::to_string(args.size()));
  return make_node(Kind::Sharp, "", std::move(args), std::move(c));
}

Formula top() { return neg(bottom()); }
Formula land(Formula a, Formula b) { return neg(lor(neg(a), neg(b))); }
Formula implies(Formula a, Formula b) { return lor(neg(a), b); }
Formula iff(Formula a, Formula b) { return land(implies(a, b), implies(b, a)); }
Formula box(Dir d, Formula f) { return neg(dia(d, neg(f))); }

Formula big_or(const std::vector<Formula>& fs) {
  if (fs.empty()) return bottom();
  Formula r = fs[0];
  for (std::size_t i = 1; i < fs.size(); ++i) r = lor(r, fs[i]);
  return r;
}

Formula big_and(const std::vector<Formula>& fs) {
  if (fs.empty()) return top();
  Formula r = fs[0];
  for (std::size_t i = 1; i < fs.size(); ++i) r = land(r, fs[i]);
  return r;
}

Formula nabla(Dir d, const std::vector<Formula>& elems) {
  std::vector<Formula> conj;
  for (const auto& e : elems) conj.push_back(dia(d, e));
  conj.push_back(box(d, big_or(elems)));
  return big_and(conj);
}

bool match_and(const Formula& f, Formula& a, Formula& b) {
  if (f.kind() != Kind::Neg) return false;
  Formula o = f.child();
  if (o.kind() != Kind::Or || o.left().kind() != Kind::Neg || o.right().kind() != Kind::Neg) return false;
  a = o.left().child();
  b = o.right().child();
  return true;
}

bool match_box(const Formula& f, Dir& d, Formula& a) {
  if (f.kind() != Kind::Neg) return false;
  Formula m = f.child();
  if (!is_diamond(m.kind()) || m.child().kind() != Kind::Neg) return false;
  d = diamond_dir(m.kind());
  a = m.child().child();
  return true;
}

bool is_top(const Formula& f) { return f.kind() == Kind::Neg && f.child().kind() == Kind::Bottom; }

Formula complement(const Formula& f) { return f.kind() == Kind::Neg ? f.child() : neg(f); }

namespace {

Formula subst_rec(const Formula& f, const std::map<std::string, Formula>& sigma,
                  std::unordered_map<std::size_t, Formula>& memo) {
  bool touched = false;
  for (const auto& [k, v] : sigma) {
    if (f.mentions(k)) {
      touched = true;
      break;
    }
  }
  if (!touched) return f;
  if (auto it = memo.find(f.id()); it != memo.end()) return it->second;
  Formula r;
  switch (f.kind()) {
    case Kind::Bottom:
      r = f;
      break;
    case Kind::Var: {
      auto it = sigma.find(f.name());
      r = it == sigma.end() ? f : it->second;
      break;
    }
    case Kind::Neg:
      r = neg(subst_rec(f.child(), sigma, memo));
      break;
    case Kind::Or:
      r = lor(subst_rec(f.left(), sigma, memo), subst_rec(f.right(), sigma, memo));
      break;
    case Kind::DiaF:
    case Kind::DiaB:
      r = dia(diamond_dir(f.kind()), subst_rec(f.child(), sigma, memo));
      break;
    case Kind::Sharp: {
      std::vector<Formula> args;
      for (const auto& a : f.args()) args.push_back(subst_rec(a, sigma, memo));
      r = sharp(f.connective_ptr(), std::move(args));
      break;
    }
  }
  memo.emplace(f.id(), r);
  return r;
}

}  // namespace

Formula substitute(const Formula& f, const std::map<std::string, Formula>& sigma) {
  std::unordered_map<std::size_t, Formula> memo;
  return subst_rec(f, sigma, memo);
}

std::size_t modal_depth(const Formula& f) {
  constexpr auto inf = std::numeric_limits<std::size_t>::max();
  switch (f.kind()) {
    case Kind::Bottom:
    case Kind::Var:
      return 0;
    case Kind::Neg:
      return modal_depth(f.child());
    case Kind::Or:
      return std::max(modal_depth(f.left()), modal_depth(f.right()));
    case Kind::DiaF:
    case Kind::DiaB: {
      auto d = modal_depth(f.child());
      return d == inf ? inf : d + 1;
    }
    case Kind::Sharp:
      return inf;
  }
  return inf;
}

std::string param_name(std::size_t i) { return "q" + std::to_string(i); }

}  // namespace flatmu
