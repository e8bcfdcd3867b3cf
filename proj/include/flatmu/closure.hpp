#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "flatmu/formula.hpp"
#include "flatmu/syntax.hpp"

namespace flatmu {

// Membership bitset over closure indices.
using Atom = boost::dynamic_bitset<std::uint64_t>;

// Lexicographic on indices: at the first index where the two differ, the set
// lacking it is smaller.
bool atom_less(const Atom& a, const Atom& b);
std::size_t atom_hash(const Atom& a);
struct AtomHash {
  std::size_t operator()(const Atom& a) const { return atom_hash(a); }
};
std::vector<std::size_t> members(const Atom& a);

class ClosureSet {
 public:
  struct Entry {
    Kind kind;
    int a = -1;  // Neg, Dia: child; Or: left
    int b = -1;  // Or: right
    std::size_t comp = 0;     // index of ∼φ
    int unfold = -1;          // Sharp: χ(♯χθ, θ)
    int bot_unfold = -1;      // Sharp: χ(⊥, θ)
  };

  // Worklist closure of origin together with □F⊥ and □B⊥.
  explicit ClosureSet(Formula origin);

  const Formula& origin() const { return origin_; }
  std::size_t size() const { return formulas_.size(); }
  const Formula& at(std::size_t i) const { return formulas_.at(i); }
  const std::vector<Formula>& formulas() const { return formulas_; }
  std::optional<std::size_t> index_of(const Formula& f) const;
  std::size_t index(const Formula& f) const;  // throws if absent
  const Entry& entry(std::size_t i) const { return entries_[i]; }

  std::size_t bottom_index() const { return bottom_; }
  std::size_t top_index() const { return top_; }
  std::size_t box_bottom(Dir d) const { return d == Dir::F ? box_bottom_f_ : box_bottom_b_; }
  // ◇d formulas as (formula index, argument index).
  const std::vector<std::pair<std::size_t, std::size_t>>& diamonds(Dir d) const {
    return d == Dir::F ? dias_f_ : dias_b_;
  }
  const std::vector<std::size_t>& sharps() const { return sharps_; }
  // Indices ordered so that every formula comes after its immediate subformulas.
  const std::vector<std::size_t>& bottom_up() const { return bottom_up_; }

  Atom empty_set() const { return Atom(size()); }

 private:
  Formula origin_;
  std::vector<Formula> formulas_;
  std::vector<Entry> entries_;
  std::unordered_map<std::size_t, std::size_t> index_;
  std::size_t bottom_ = 0, top_ = 0, box_bottom_f_ = 0, box_bottom_b_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> dias_f_, dias_b_;
  std::vector<std::size_t> sharps_, bottom_up_;
};

inline ClosureSet fl_closure(Formula f) { return ClosureSet(f); }

bool is_atom(const Atom& a, const ClosureSet& sigma);

// Hintikka atoms in lexicographic order. Throws std::length_error when the
// number of propositionally independent members (variables, ◇, ♯) exceeds
// kMaxAtomBase.
inline constexpr std::size_t kMaxAtomBase = 24;
std::vector<Atom> enumerate_atoms(const ClosureSet& sigma);
void for_each_atom(const ClosureSet& sigma, const std::function<void(const Atom&)>& fn);

// Whether B may label an R-successor of a node labelled A: every ◇Fψ ∈ Σ with
// ψ ∈ B is in A, and every ◇Bψ ∈ Σ with ψ ∈ A is in B. In particular □Fφ ∈ A forces φ ∈ B
// and □Bφ ∈ B forces φ ∈ A.
bool coherent(const Atom& a, const Atom& b, const ClosureSet& sigma);

struct Deferral {
  struct Ref {
    int deferral = -1;     // deferral id, or -1 for an x-free leaf
    std::size_t inst = 0;  // closure index of the instantiated subformula
  };
  std::size_t host = 0;  // closure index of ♯χθ
  int view_node = -1;
  ViewNode::Kind kind = ViewNode::Kind::X;
  Dir dir = Dir::F;
  Formula body;          // uninstantiated subformula of the body
  std::size_t inst = 0;  // closure index of body[x := host, q := θ]
  std::vector<Ref> children;
  std::size_t theta = 0;       // And: the x-free conjunct, instantiated
  std::size_t bot_unfold = 0;  // X: χ(⊥, θ)
  int root = -1;               // X: deferral id of the whole body
  std::size_t box_bottom = 0;  // Box: □dir⊥
};

class DeferralTable {
 public:
  DeferralTable() = default;
  // Requires every connective hosted in Σ to be disjunctive.
  explicit DeferralTable(const ClosureSet& sigma);

  std::size_t size() const { return entries_.size(); }
  const Deferral& at(std::size_t i) const { return entries_.at(i); }
  const std::vector<Deferral>& entries() const { return entries_; }
  // Ids of the deferrals hosted by the ♯-formula at closure index host.
  std::vector<std::size_t> hosted_by(std::size_t host) const;

 private:
  std::vector<Deferral> entries_;
};

inline DeferralTable deferral_table(const ClosureSet& sigma) { return DeferralTable(sigma); }

}  // namespace flatmu
