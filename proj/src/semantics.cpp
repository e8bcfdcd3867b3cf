#include "flatmu/semantics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace flatmu {

// ---------------------------------------------------------------- frames

Frame::Frame(std::size_t states) : succ_(states), pred_(states) {
  if (states == 0) throw std::invalid_argument("a frame needs at least one state");
}

void Frame::add_edge(std::size_t from, std::size_t to) {
  if (from >= size() || to >= size()) throw std::out_of_range("edge endpoint out of range");
  if (has_edge(from, to)) return;
  auto ins = [](std::vector<std::uint32_t>& v, std::size_t x) {
    v.insert(std::lower_bound(v.begin(), v.end(), x), static_cast<std::uint32_t>(x));
  };
  ins(succ_[from], to);
  ins(pred_[to], from);
}

bool Frame::has_edge(std::size_t from, std::size_t to) const {
  return std::binary_search(succ_[from].begin(), succ_[from].end(), to);
}

std::vector<std::pair<std::size_t, std::size_t>> Frame::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < size(); ++i)
    for (auto j : succ_[i]) out.emplace_back(i, j);
  return out;
}

Frame Frame::from_mask(std::size_t n, std::uint64_t mask) {
  Frame f(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (mask >> (i * n + j) & 1) f.add_edge(i, j);
  return f;
}

void KripkeModel::set(const std::string& v, std::size_t state, bool value) {
  auto [it, fresh] = valuation.try_emplace(v, TruthSet(size()));
  it->second.set(state, value);
}

// ---------------------------------------------------------------- programs

Program::Program(const std::vector<Formula>& roots) {
  std::map<std::size_t, std::uint32_t> memo;
  for (const auto& r : roots) roots_.push_back(compile(r, memo));
}

std::uint32_t Program::compile(const Formula& f, std::map<std::size_t, std::uint32_t>& memo) {
  if (auto it = memo.find(f.id()); it != memo.end()) return it->second;
  Instr in{};
  switch (f.kind()) {
    case Kind::Bottom:
      in.op = Op::Bottom;
      break;
    case Kind::Var: {
      in.op = Op::Var;
      auto it = std::find(var_names_.begin(), var_names_.end(), f.name());
      if (it == var_names_.end()) {
        var_names_.push_back(f.name());
        it = var_names_.end() - 1;
      }
      in.a = static_cast<std::uint32_t>(it - var_names_.begin());
      break;
    }
    case Kind::Neg:
      in.op = Op::Neg;
      in.a = compile(f.child(), memo);
      break;
    case Kind::Or:
      in.op = Op::Or;
      in.a = compile(f.left(), memo);
      in.b = compile(f.right(), memo);
      break;
    case Kind::DiaF:
    case Kind::DiaB:
      in.op = f.kind() == Kind::DiaF ? Op::DiaF : Op::DiaB;
      in.a = compile(f.child(), memo);
      break;
    case Kind::Sharp: {
      in.op = Op::Sharp;
      for (const auto& a : f.args()) in.args.push_back(compile(a, memo));
      const Connective* c = &f.connective();
      auto it = body_index_.find(c);
      if (it == body_index_.end()) {
        auto body = std::shared_ptr<Program>(new Program());
        body->var_names_.push_back(kRecVar);
        for (std::size_t i = 1; i <= c->arity; ++i) body->var_names_.push_back(param_name(i));
        std::map<std::size_t, std::uint32_t> bmemo;
        body->roots_.push_back(body->compile(c->body, bmemo));
        if (body->var_names_.size() != c->arity + 1)
          throw std::logic_error("connective body mentions a foreign variable");
        bodies_.push_back(body);
        it = body_index_.emplace(c, static_cast<std::uint32_t>(bodies_.size() - 1)).first;
      }
      in.a = it->second;
      break;
    }
  }
  code_.push_back(std::move(in));
  auto idx = static_cast<std::uint32_t>(code_.size() - 1);
  memo.emplace(f.id(), idx);
  return idx;
}

// ---------------------------------------------------------------- evaluator

Evaluator::Evaluator(const Program& p) : prog_(p), body_eval_(p.code_.size()) {
  for (std::size_t i = 0; i < p.code_.size(); ++i)
    if (p.code_[i].op == Program::Op::Sharp) body_eval_[i] = std::make_unique<Evaluator>(*p.bodies_[p.code_[i].a]);
}

void Evaluator::run(const Frame& frame, const LaneValuation& val) {
  if (val.lanes == 0 || val.lanes > 64) throw std::invalid_argument("lane count must be in 1..64");
  mask_ = val.lanes == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << val.lanes) - 1);
  zeros_.assign(frame.size(), 0);
  std::vector<const std::uint64_t*> slots;
  for (const auto& name : prog_.var_names_) {
    auto it = val.words.find(name);
    if (it == val.words.end()) {
      slots.push_back(zeros_.data());
    } else {
      if (it->second.size() != frame.size()) throw std::invalid_argument("valuation of " + name + " has wrong length");
      slots.push_back(it->second.data());
    }
  }
  run_slots(frame, slots);
}

void Evaluator::run_slots(const Frame& frame, const std::vector<const std::uint64_t*>& slots) {
  n_ = frame.size();
  const auto& code = prog_.code_;
  values_.resize(code.size() * n_);
  for (std::uint32_t i = 0; i < code.size(); ++i) {
    const auto& in = code[i];
    auto out = cell(i);
    switch (in.op) {
      case Program::Op::Bottom:
        std::fill(out.begin(), out.end(), 0);
        break;
      case Program::Op::Var:
        std::copy(slots[in.a], slots[in.a] + n_, out.begin());
        break;
      case Program::Op::Neg: {
        auto a = cell(in.a);
        for (std::size_t s = 0; s < n_; ++s) out[s] = ~a[s] & mask_;
        break;
      }
      case Program::Op::Or: {
        auto a = cell(in.a);
        auto b = cell(in.b);
        for (std::size_t s = 0; s < n_; ++s) out[s] = a[s] | b[s];
        break;
      }
      case Program::Op::DiaF:
      case Program::Op::DiaB: {
        auto a = cell(in.a);
        Dir d = in.op == Program::Op::DiaF ? Dir::F : Dir::B;
        for (std::size_t s = 0; s < n_; ++s) {
          std::uint64_t w = 0;
          for (auto t : frame.neighbors(s, d)) w |= a[t];
          out[s] = w;
        }
        break;
      }
      case Program::Op::Sharp: {
        Evaluator& be = *body_eval_[i];
        be.mask_ = mask_;
        // x lives in this cell during iteration; start from the empty set.
        std::fill(out.begin(), out.end(), 0);
        std::vector<const std::uint64_t*> bslots{out.data()};
        for (auto a : in.args) bslots.push_back(cell(a).data());
        for (;;) {
          be.run_slots(frame, bslots);
          auto r = be.result(0);
          if (std::equal(r.begin(), r.end(), out.begin())) break;
          std::copy(r.begin(), r.end(), out.begin());
        }
        break;
      }
    }
  }
}

std::span<const std::uint64_t> Evaluator::result(std::size_t r) const {
  return {values_.data() + prog_.roots_.at(r) * n_, n_};
}

namespace {

LaneValuation single_lane(const KripkeModel& m) {
  LaneValuation v;
  v.lanes = 1;
  for (const auto& [name, set] : m.valuation) {
    if (set.size() != m.size()) throw std::invalid_argument("valuation of " + name + " has wrong length");
    std::vector<std::uint64_t> w(m.size());
    for (std::size_t s = 0; s < m.size(); ++s) w[s] = set.test(s) ? 1 : 0;
    v.words.emplace(name, std::move(w));
  }
  return v;
}

TruthSet lane0(std::span<const std::uint64_t> words) {
  TruthSet t(words.size());
  for (std::size_t s = 0; s < words.size(); ++s) t.set(s, words[s] & 1);
  return t;
}

}  // namespace

std::vector<TruthSet> eval_all(const std::vector<Formula>& fs, const KripkeModel& m) {
  Program p(fs);
  Evaluator e(p);
  e.run(m.frame, single_lane(m));
  std::vector<TruthSet> out;
  for (std::size_t i = 0; i < fs.size(); ++i) out.push_back(lane0(e.result(i)));
  return out;
}

TruthSet eval(const Formula& f, const KripkeModel& m) { return eval_all({f}, m).front(); }

std::vector<std::uint64_t> nabla_relation_lanes(const std::vector<std::span<const std::uint64_t>>& psi, Dir dir,
                                                const Frame& frame, std::uint64_t lane_mask) {
  std::vector<std::uint64_t> out(frame.size());
  for (std::size_t w = 0; w < frame.size(); ++w) {
    std::uint64_t ok = lane_mask;
    const auto& nb = frame.neighbors(w, dir);
    // (a) every neighbour is related to some member
    for (auto t : nb) {
      std::uint64_t some = 0;
      for (const auto& p : psi) some |= p[t];
      ok &= some;
    }
    // (b) every member is related to some neighbour
    for (const auto& p : psi) {
      std::uint64_t some = 0;
      for (auto t : nb) some |= p[t];
      ok &= some;
    }
    out[w] = ok;
  }
  return out;
}

bool eval_nabla_via_relation(const std::vector<Formula>& psi, Dir dir, const KripkeModel& m, std::size_t w) {
  if (w >= m.size()) throw std::out_of_range("state out of range");
  auto sets = eval_all(psi, m);
  const auto& nb = m.frame.neighbors(w, dir);
  for (auto t : nb) {
    bool some = false;
    for (const auto& s : sets) some = some || s.test(t);
    if (!some) return false;
  }
  for (const auto& s : sets) {
    bool some = false;
    for (auto t : nb) some = some || s.test(t);
    if (!some) return false;
  }
  return true;
}

Formula approximant(const Connective& c, std::size_t k, const std::vector<Formula>& theta) {
  if (theta.size() != c.arity) throw std::invalid_argument("approximant: arity mismatch");
  std::map<std::string, Formula> m{{kRecVar, bottom()}};
  for (std::size_t i = 0; i < theta.size(); ++i) m.emplace(param_name(i + 1), theta[i]);
  Formula cur = substitute(c.body, m);
  for (std::size_t i = 0; i < k; ++i) {
    m[kRecVar] = cur;
    cur = substitute(c.body, m);
  }
  return cur;
}

std::vector<Formula> axiom_instances(const std::vector<Formula>& pool) {
  std::vector<Formula> out;
  for (Dir d : {Dir::F, Dir::B}) out.push_back(neg(dia(d, bottom())));
  for (Dir d : {Dir::F, Dir::B})
    for (const auto& a : pool)
      for (const auto& b : pool) out.push_back(iff(dia(d, lor(a, b)), lor(dia(d, a), dia(d, b))));
  for (const auto& a : pool) {
    out.push_back(implies(a, box(Dir::F, dia(Dir::B, a))));
    out.push_back(implies(a, box(Dir::B, dia(Dir::F, a))));
  }
  std::vector<std::shared_ptr<const Connective>> conns;
  for (const auto& f : pool)
    for (const auto& c : connectives_of(f))
      if (std::none_of(conns.begin(), conns.end(), [&](const auto& k) { return k.get() == c.get(); }))
        conns.push_back(c);
  for (const auto& c : conns) {
    // every arity-long tuple drawn from the pool
    std::vector<std::size_t> idx(c->arity, 0);
    if (c->arity > 0 && pool.empty()) continue;
    for (;;) {
      std::vector<Formula> theta;
      for (auto i : idx) theta.push_back(pool[i]);
      Formula s = sharp(c, theta);
      std::map<std::string, Formula> m{{kRecVar, s}};
      for (std::size_t i = 0; i < theta.size(); ++i) m.emplace(param_name(i + 1), theta[i]);
      out.push_back(implies(substitute(c->body, m), s));
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == pool.size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
  }
  return out;
}

// ---------------------------------------------------------------- model search

bool canonical_mask(std::size_t n, std::uint64_t mask) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  while (std::next_permutation(perm.begin(), perm.end())) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (mask >> (i * n + j) & 1) m |= std::uint64_t{1} << (perm[i] * n + perm[j]);
    if (m < mask) return false;
  }
  return true;
}

std::optional<PointedModel> brute_force_sat(const Formula& f, std::size_t max_states) {
  if (max_states > 6) throw std::invalid_argument("brute_force_sat: at most 6 states");
  Program prog({f});
  Evaluator ev(prog);
  const auto& vars = f.variables();
  const std::size_t nv = vars.size();
  for (std::size_t n = 1; n <= max_states; ++n) {
    const std::size_t vbits = n * nv;
    if (vbits > 40) throw std::invalid_argument("brute_force_sat: too many valuations");
    const std::uint64_t nval = std::uint64_t{1} << vbits;
    const std::uint64_t nmask = std::uint64_t{1} << (n * n);
    for (std::uint64_t mask = 0; mask < nmask; ++mask) {
      if (!canonical_mask(n, mask)) continue;
      Frame frame = Frame::from_mask(n, mask);
      for (std::uint64_t base = 0; base < nval; base += 64) {
        LaneValuation lv;
        lv.lanes = static_cast<std::size_t>(std::min<std::uint64_t>(64, nval - base));
        for (std::size_t j = 0; j < nv; ++j) {
          std::vector<std::uint64_t> w(n, 0);
          for (std::size_t l = 0; l < lv.lanes; ++l) {
            std::uint64_t v = base + l;
            for (std::size_t s = 0; s < n; ++s)
              if (v >> (s * nv + j) & 1) w[s] |= std::uint64_t{1} << l;
          }
          lv.words.emplace(vars[j], std::move(w));
        }
        ev.run(frame, lv);
        auto r = ev.result(0);
        std::uint64_t any = 0;
        for (auto w : r) any |= w;
        if (!any) continue;
        unsigned lane = static_cast<unsigned>(__builtin_ctzll(any));
        std::uint64_t v = base + lane;
        PointedModel pm{KripkeModel(frame), 0};
        for (std::size_t j = 0; j < nv; ++j) {
          pm.model.valuation[vars[j]] = TruthSet(n);
          for (std::size_t s = 0; s < n; ++s)
            if (v >> (s * nv + j) & 1) pm.model.valuation[vars[j]].set(s);
        }
        for (std::size_t s = 0; s < n; ++s)
          if (r[s] >> lane & 1) {
            pm.state = s;
            break;
          }
        return pm;
      }
    }
  }
  return std::nullopt;
}

}  // namespace flatmu
