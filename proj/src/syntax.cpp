#include "flatmu/syntax.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace flatmu {

const char* to_string(Disjunctive d) {
  switch (d) {
    case Disjunctive::Forward:
      return "forward";
    case Disjunctive::Backward:
      return "backward";
    case Disjunctive::None:
      return "none";
  }
  return "none";
}

SyntaxError::SyntaxError(Code code, std::size_t pos, const std::string& msg)
    : std::runtime_error("at " + std::to_string(pos) + ": " + msg), code_(code), pos_(pos) {}

// ---------------------------------------------------------------- parsing

namespace {

class Parser {
 public:
  Parser(std::string_view text, const ConnectiveTable& table) : s_(text), table_(table) {}

  Formula run() {
    Formula f = parse_iff();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw SyntaxError(SyntaxError::Code::Syntax, pos_, msg); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  bool peek(std::string_view tok) {
    skip_ws();
    return s_.substr(pos_, tok.size()) == tok;
  }

  Formula parse_iff() {
    Formula f = parse_imp();
    while (accept("<->")) f = iff(f, parse_imp());
    return f;
  }

  Formula parse_imp() {
    Formula f = parse_or();
    if (accept("->")) return implies(f, parse_imp());
    return f;
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (accept("|")) f = lor(f, parse_and());
    return f;
  }

  Formula parse_and() {
    Formula f = parse_unary();
    while (accept("&")) f = land(f, parse_unary());
    return f;
  }

  Formula parse_unary() {
    if (accept("~")) return neg(parse_unary());
    if (peek("<->")) fail("unexpected '<->'");
    if (accept("<F>")) return dia(Dir::F, parse_unary());
    if (accept("<B>")) return dia(Dir::B, parse_unary());
    if (accept("[F]")) return box(Dir::F, parse_unary());
    if (accept("[B]")) return box(Dir::B, parse_unary());
    return parse_atom();
  }

  std::vector<Formula> parse_list(char close) {
    std::vector<Formula> out;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == close) {
      ++pos_;
      return out;
    }
    for (;;) {
      out.push_back(parse_iff());
      if (accept(",")) continue;
      expect(std::string_view(&close, 1));
      return out;
    }
  }

  Formula parse_atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (accept("_|_")) return bottom();
    if (accept("(")) {
      Formula f = parse_iff();
      expect(")");
      return f;
    }
    for (Dir d : {Dir::F, Dir::B}) {
      std::string kw = std::string("nabla") + dir_name(d);
      if (s_.substr(pos_, kw.size()) == kw) {
        std::size_t save = pos_;
        pos_ += kw.size();
        if (accept("{")) return nabla(d, parse_list('}'));
        pos_ = save;
      }
    }
    if (s_[pos_] == '#') {
      std::size_t start = pos_++;
      std::size_t b = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      if (b == pos_) fail("expected connective name after '#'");
      std::string name(s_.substr(b, pos_ - b));
      auto c = table_.find(name);
      if (!c) throw SyntaxError(SyntaxError::Code::UnknownConnective, start, "unknown connective '" + name + "'");
      std::vector<Formula> args;
      if (accept("(")) args = parse_list(')');
      if (args.size() != c->arity)
        throw SyntaxError(SyntaxError::Code::ArityMismatch, start,
                          "connective '" + name + "' takes " + std::to_string(c->arity) + " argument(s), got " +
                              std::to_string(args.size()));
      return sharp(c, std::move(args));
    }
    if (std::islower(static_cast<unsigned char>(s_[pos_]))) {
      std::size_t b = pos_;
      while (pos_ < s_.size() && (std::islower(static_cast<unsigned char>(s_[pos_])) ||
                                  std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      return var(std::string(s_.substr(b, pos_ - b)));
    }
    fail(std::string("unexpected character '") + s_[pos_] + "'");
  }

  std::string_view s_;
  const ConnectiveTable& table_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- printing

// Precedence: 1 = |, 2 = &, 3 = prefix operators and atoms.
void print_rec(const Formula& f, int ctx, std::string& out) {
  Formula a, b;
  Dir d;
  if (match_and(f, a, b)) {
    if (ctx > 2) out += '(';
    print_rec(a, 2, out);
    out += " & ";
    print_rec(b, 3, out);
    if (ctx > 2) out += ')';
    return;
  }
  if (match_box(f, d, a)) {
    out += d == Dir::F ? "[F]" : "[B]";
    print_rec(a, 3, out);
    return;
  }
  switch (f.kind()) {
    case Kind::Bottom:
      out += "_|_";
      return;
    case Kind::Var:
      out += f.name();
      return;
    case Kind::Neg:
      out += '~';
      print_rec(f.child(), 3, out);
      return;
    case Kind::Or:
      if (ctx > 1) out += '(';
      print_rec(f.left(), 1, out);
      out += " | ";
      print_rec(f.right(), 2, out);
      if (ctx > 1) out += ')';
      return;
    case Kind::DiaF:
    case Kind::DiaB:
      out += f.kind() == Kind::DiaF ? "<F>" : "<B>";
      print_rec(f.child(), 3, out);
      return;
    case Kind::Sharp: {
      out += '#';
      out += f.connective().name;
      if (f.args().empty()) return;
      out += '(';
      bool first = true;
      for (const auto& arg : f.args()) {
        if (!first) out += ", ";
        first = false;
        print_rec(arg, 0, out);
      }
      out += ')';
      return;
    }
  }
}

bool positive_rec(const Formula& f, std::string_view v, bool negated) {
  if (!f.mentions(v)) return true;
  switch (f.kind()) {
    case Kind::Bottom:
      return true;
    case Kind::Var:
      return !negated;
    case Kind::Neg:
      return positive_rec(f.child(), v, !negated);
    case Kind::Or:
      return positive_rec(f.left(), v, negated) && positive_rec(f.right(), v, negated);
    case Kind::DiaF:
    case Kind::DiaB:
      return positive_rec(f.child(), v, negated);
    case Kind::Sharp:
      for (const auto& a : f.args())
        if (!positive_rec(a, v, negated)) return false;
      return true;
  }
  return true;
}

bool guarded_rec(const Formula& f) {
  if (!f.mentions(kRecVar)) return true;
  switch (f.kind()) {
    case Kind::Var:
      return false;
    case Kind::Neg:
      return guarded_rec(f.child());
    case Kind::Or:
      return guarded_rec(f.left()) && guarded_rec(f.right());
    case Kind::DiaF:
    case Kind::DiaB:
      return true;
    case Kind::Sharp:
      for (const auto& a : f.args())
        if (!guarded_rec(a)) return false;
      return true;
    case Kind::Bottom:
      return true;
  }
  return true;
}

// ---------------------------------------------------------------- nabla view

class ViewBuilder {
 public:
  explicit ViewBuilder(Dir d) { view_.dir = d; }

  std::optional<DisjunctiveView> run(const Formula& body) {
    int r = build(body);
    if (r < 0) return std::nullopt;
    view_.root = r;
    std::set<int> seen;
    collect(r, seen);
    return std::move(view_);
  }

 private:
  static void flatten(const Formula& f, std::vector<Formula>& out) {
    Formula a, b;
    if (match_and(f, a, b)) {
      flatten(a, out);
      flatten(b, out);
    } else {
      out.push_back(f);
    }
  }

  int add(ViewNode n) {
    view_.nodes.push_back(std::move(n));
    int idx = static_cast<int>(view_.nodes.size()) - 1;
    by_src_.emplace(view_.nodes.back().src.id(), idx);
    return idx;
  }

  // Recognizes f as literally nabla(dir, args) and returns the args.
  std::optional<std::vector<Formula>> nabla_group(const Formula& f) const {
    std::vector<Formula> conj;
    flatten(f, conj);
    if (conj.size() < 2) return std::nullopt;
    std::vector<Formula> args;
    for (std::size_t i = 0; i + 1 < conj.size(); ++i) {
      if (!is_diamond(conj[i].kind()) || diamond_dir(conj[i].kind()) != view_.dir) return std::nullopt;
      args.push_back(conj[i].child());
    }
    if (nabla(view_.dir, args) != f) return std::nullopt;
    return args;
  }

  int build(const Formula& f) {
    if (auto it = by_src_.find(f.id()); it != by_src_.end()) return it->second;
    if (!f.mentions(kRecVar)) return add({ViewNode::Kind::Leaf, f, {}, {}});
    if (f.kind() == Kind::Var) return add({ViewNode::Kind::X, f, {}, {}});
    if (f.kind() == Kind::Or) {
      int l = build(f.left());
      if (l < 0) return -1;
      int r = build(f.right());
      if (r < 0) return -1;
      return add({ViewNode::Kind::Or, f, {}, {l, r}});
    }
    if (is_diamond(f.kind())) {
      if (diamond_dir(f.kind()) != view_.dir) return -1;
      int c = build(f.child());
      if (c < 0) return -1;
      return add({ViewNode::Kind::Dia, f, {}, {c}});
    }
    Formula a, b;
    Dir d;
    if (match_box(f, d, a)) {
      if (d != view_.dir) return -1;
      int c = build(a);
      if (c < 0) return -1;
      return add({ViewNode::Kind::Box, f, {}, {c}});
    }
    if (match_and(f, a, b)) {
      if (!a.mentions(kRecVar) || !b.mentions(kRecVar)) {
        Formula theta = a.mentions(kRecVar) ? b : a;
        Formula rest = a.mentions(kRecVar) ? a : b;
        int c = build(rest);
        if (c < 0) return -1;
        return add({ViewNode::Kind::And, f, theta, {c}});
      }
      auto args = nabla_group(f);
      if (!args) return -1;
      std::vector<int> elems;
      for (const auto& e : *args) {
        int c = build(e);
        if (c < 0) return -1;
        elems.push_back(c);
      }
      return add({ViewNode::Kind::Nabla, f, {}, std::move(elems)});
    }
    return -1;
  }

  void collect(int n, std::set<int>& seen) {
    if (view_.nodes[n].kind == ViewNode::Kind::Leaf || !seen.insert(n).second) return;
    view_.preorder.push_back(n);
    for (int c : view_.nodes[n].children) collect(c, seen);
  }

  DisjunctiveView view_;
  std::unordered_map<std::size_t, int> by_src_;
};

std::pair<Formula, Formula> split(const DisjunctiveView& v, int n) {
  const ViewNode& node = v.nodes[n];
  switch (node.kind) {
    case ViewNode::Kind::X:
      return {top(), bottom()};
    case ViewNode::Kind::Leaf:
      return {bottom(), node.src};
    case ViewNode::Kind::And: {
      auto [c, g] = split(v, node.children[0]);
      return {land(node.theta, c), land(node.theta, g)};
    }
    case ViewNode::Kind::Or: {
      auto [c1, g1] = split(v, node.children[0]);
      auto [c2, g2] = split(v, node.children[1]);
      return {lor(c1, c2), lor(g1, g2)};
    }
    case ViewNode::Kind::Dia:
    case ViewNode::Kind::Box:
    case ViewNode::Kind::Nabla:
      return {bottom(), node.src};
  }
  return {bottom(), node.src};
}

void collect_connectives(const Formula& f, std::vector<std::shared_ptr<const Connective>>& out,
                         std::set<std::size_t>& seen) {
  if (!f.has_sharp() || !seen.insert(f.id()).second) return;
  switch (f.kind()) {
    case Kind::Neg:
    case Kind::DiaF:
    case Kind::DiaB:
      collect_connectives(f.child(), out, seen);
      break;
    case Kind::Or:
      collect_connectives(f.left(), out, seen);
      collect_connectives(f.right(), out, seen);
      break;
    case Kind::Sharp: {
      bool known = false;
      for (const auto& c : out) known = known || c.get() == &f.connective();
      if (!known) out.push_back(f.connective_ptr());
      for (const auto& a : f.args()) collect_connectives(a, out, seen);
      break;
    }
    default:
      break;
  }
}

Formula translate_rec(const Formula& f, const GuardMap& map, std::unordered_map<std::size_t, Formula>& memo) {
  if (!f.has_sharp()) return f;
  if (auto it = memo.find(f.id()); it != memo.end()) return it->second;
  Formula r;
  switch (f.kind()) {
    case Kind::Neg:
      r = neg(translate_rec(f.child(), map, memo));
      break;
    case Kind::Or:
      r = lor(translate_rec(f.left(), map, memo), translate_rec(f.right(), map, memo));
      break;
    case Kind::DiaF:
    case Kind::DiaB:
      r = dia(diamond_dir(f.kind()), translate_rec(f.child(), map, memo));
      break;
    case Kind::Sharp: {
      auto it = map.find(&f.connective());
      if (it == map.end()) throw std::invalid_argument("translate_guarded: no entry for connective " + f.connective().name);
      std::vector<Formula> args;
      for (const auto& a : f.args()) args.push_back(translate_rec(a, map, memo));
      r = sharp(it->second, std::move(args));
      break;
    }
    default:
      r = f;
  }
  memo.emplace(f.id(), r);
  return r;
}

}  // namespace

Formula parse(std::string_view text, const ConnectiveTable& table) { return Parser(text, table).run(); }

std::string print(const Formula& f) {
  std::string out;
  print_rec(f, 0, out);
  return out;
}

bool is_positive_in(const Formula& f, std::string_view v) { return positive_rec(f, v, false); }
bool is_guarded_body(const Formula& body) { return guarded_rec(body); }
bool is_guarded(const Connective& c) { return guarded_rec(c.body); }

std::optional<DisjunctiveView> disjunctive_view(const Formula& body, Dir dir) { return ViewBuilder(dir).run(body); }

Disjunctive classify_disjunctive(const Connective& c) { return c.disjunctive; }

std::shared_ptr<const Connective> make_connective(std::string name, std::size_t arity, Formula body) {
  if (name.empty()) throw std::invalid_argument("connective name is empty");
  for (char ch : name)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_')
      throw std::invalid_argument("bad connective name '" + name + "'");
  if (body.has_sharp()) throw std::invalid_argument("connective " + name + ": body must be ♯-free");
  for (const auto& v : body.variables()) {
    bool ok = v == kRecVar;
    for (std::size_t i = 1; i <= arity && !ok; ++i) ok = v == param_name(i);
    if (!ok) throw std::invalid_argument("connective " + name + ": variable '" + v + "' is neither x nor a parameter");
  }
  if (!is_positive_in(body, kRecVar)) throw std::invalid_argument("connective " + name + ": body is not positive in x");

  auto c = std::make_shared<Connective>();
  c->name = std::move(name);
  c->arity = arity;
  c->body = body;
  c->guarded = guarded_rec(body);
  if (auto v = disjunctive_view(body, Dir::F)) {
    c->disjunctive = Disjunctive::Forward;
    c->view = std::move(v);
  } else if (auto w = disjunctive_view(body, Dir::B)) {
    c->disjunctive = Disjunctive::Backward;
    c->view = std::move(w);
  }
  return c;
}

void ConnectiveTable::add(std::shared_ptr<const Connective> c) {
  if (!table_.emplace(c->name, c).second) throw std::invalid_argument("duplicate connective '" + c->name + "'");
}

std::shared_ptr<const Connective> ConnectiveTable::find(std::string_view name) const {
  auto it = table_.find(name);
  return it == table_.end() ? nullptr : it->second;
}

GuardificationResult guardify(const Connective& c) {
  if (!c.view) throw std::invalid_argument("guardify: connective " + c.name + " is not disjunctive");
  auto [g1, g2] = split(*c.view, c.view->root);
  GuardificationResult r;
  r.gamma1 = g1;
  r.gamma2 = make_connective(c.name + "_g", c.arity, g2);
  r.equivalence = iff(c.body, lor(land(var(kRecVar), g1), g2));
  return r;
}

std::vector<std::shared_ptr<const Connective>> connectives_of(const Formula& f) {
  std::vector<std::shared_ptr<const Connective>> cs;
  std::set<std::size_t> seen;
  collect_connectives(f, cs, seen);
  return cs;
}

GuardMap guard_map_for(const Formula& f) {
  auto cs = connectives_of(f);
  GuardMap m;
  for (const auto& c : cs) m.emplace(c.get(), c->guarded ? c : guardify(*c).gamma2);
  return m;
}

Formula translate_guarded(const Formula& f, const GuardMap& map) {
  std::unordered_map<std::size_t, Formula> memo;
  return translate_rec(f, map, memo);
}

ConnectiveTable load_connectives_json(std::string_view json_text) {
  auto j = nlohmann::json::parse(json_text);
  const nlohmann::json& arr = j.is_object() && j.contains("connectives") ? j.at("connectives") : j;
  if (!arr.is_array()) throw std::invalid_argument("connective file: expected an array of definitions");
  ConnectiveTable t;
  for (const auto& d : arr) {
    std::string name = d.at("name").get<std::string>();
    auto arity = d.at("arity").get<std::size_t>();
    Formula body = parse(d.at("body").get<std::string>());
    t.add(make_connective(name, arity, body));
  }
  return t;
}

ConnectiveTable load_connectives_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_connectives_json(ss.str());
}

}  // namespace flatmu
