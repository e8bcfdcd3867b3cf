#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "flatmu/formula.hpp"
#include "flatmu/syntax.hpp"

namespace flatmu {

using TruthSet = boost::dynamic_bitset<std::uint64_t>;

class Frame {
 public:
  explicit Frame(std::size_t states = 1);
  std::size_t size() const { return succ_.size(); }
  void add_edge(std::size_t from, std::size_t to);
  bool has_edge(std::size_t from, std::size_t to) const;
  const std::vector<std::uint32_t>& successors(std::size_t s) const { return succ_[s]; }
  const std::vector<std::uint32_t>& predecessors(std::size_t s) const { return pred_[s]; }
  const std::vector<std::uint32_t>& neighbors(std::size_t s, Dir d) const { return d == Dir::F ? succ_[s] : pred_[s]; }
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  // Frame on n states whose edge (i, j) is bit i*n + j of mask.
  static Frame from_mask(std::size_t n, std::uint64_t mask);

 private:
  std::vector<std::vector<std::uint32_t>> succ_, pred_;
};

struct KripkeModel {
  Frame frame;
  std::map<std::string, TruthSet> valuation;  // unmentioned variables are empty

  KripkeModel() = default;
  explicit KripkeModel(Frame f) : frame(std::move(f)) {}
  std::size_t size() const { return frame.size(); }
  void set(const std::string& var, std::size_t state, bool value = true);
};

// Compiled formula DAG. Evaluation is bit-sliced: each state carries one
// 64-bit word whose bit l is the truth value under valuation lane l, so one
// pass evaluates up to 64 valuations over a shared frame.
class Program {
 public:
  explicit Program(const std::vector<Formula>& roots);
  std::size_t root_count() const { return roots_.size(); }
  const std::vector<std::string>& variables() const { return var_names_; }

 private:
  friend class Evaluator;
  enum class Op : std::uint8_t { Bottom, Var, Neg, Or, DiaF, DiaB, Sharp };
  struct Instr {
    Op op;
    std::uint32_t a = 0, b = 0;  // operands; Var: variable slot; Sharp: body program index
    std::vector<std::uint32_t> args;
  };
  Program() = default;
  std::uint32_t compile(const Formula& f, std::map<std::size_t, std::uint32_t>& memo);

  std::vector<Instr> code_;
  std::vector<std::uint32_t> roots_;
  std::vector<std::string> var_names_;
  // Connective bodies, compiled with variable slots x, q1..qn.
  std::vector<std::shared_ptr<Program>> bodies_;
  std::map<const Connective*, std::uint32_t> body_index_;
};

// Per-variable lane words, one per state. Missing variables are all-false.
struct LaneValuation {
  std::size_t lanes = 1;
  std::map<std::string, std::vector<std::uint64_t>> words;
};

class Evaluator {
 public:
  explicit Evaluator(const Program& p);
  void run(const Frame& frame, const LaneValuation& val);
  // Lane words of root r, one per state.
  std::span<const std::uint64_t> result(std::size_t r) const;
  std::uint64_t lane_mask() const { return mask_; }

 private:
  void run_slots(const Frame& frame, const std::vector<const std::uint64_t*>& slots);
  std::span<std::uint64_t> cell(std::uint32_t i) { return {values_.data() + i * n_, n_}; }

  const Program& prog_;
  std::size_t n_ = 0;
  std::uint64_t mask_ = 1;
  std::vector<std::uint64_t> values_;
  std::vector<std::uint64_t> zeros_;
  std::vector<std::unique_ptr<Evaluator>> body_eval_;  // one per Sharp instruction
  std::vector<std::uint64_t> scratch_;
};

TruthSet eval(const Formula& f, const KripkeModel& m);
// Truth sets of several formulas in one pass.
std::vector<TruthSet> eval_all(const std::vector<Formula>& fs, const KripkeModel& m);

// Cover semantics through the full-relation test on dir-neighbours of w.
bool eval_nabla_via_relation(const std::vector<Formula>& psi, Dir dir, const KripkeModel& m, std::size_t w);
// Same test over lane words; psi[i] holds one word per state. Returns one word per state.
std::vector<std::uint64_t> nabla_relation_lanes(const std::vector<std::span<const std::uint64_t>>& psi, Dir dir,
                                                const Frame& frame, std::uint64_t lane_mask);

// χ⁰ = χ(⊥, θ), χ^{m+1} = χ(χ^m, θ).
Formula approximant(const Connective& c, std::size_t k, const std::vector<Formula>& theta);

// Instances of the axiom schemata over the pool: ¬◇⊥ (both directions),
// additivity, the converse axioms and the prefixpoint axiom for every ♯-formula
// in the pool.
std::vector<Formula> axiom_instances(const std::vector<Formula>& pool);

struct PointedModel {
  KripkeModel model;
  std::size_t state = 0;
};

// Least witness in the order (states, relation mask, valuation index, state).
std::optional<PointedModel> brute_force_sat(const Formula& f, std::size_t max_states);

// Whether mask is the least relation mask in its isomorphism class.
bool canonical_mask(std::size_t n, std::uint64_t mask);

}  // namespace flatmu
