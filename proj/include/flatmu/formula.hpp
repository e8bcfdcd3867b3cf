#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flatmu {

enum class Dir : std::uint8_t { F, B };

inline Dir opposite(Dir d) { return d == Dir::F ? Dir::B : Dir::F; }
inline const char* dir_name(Dir d) { return d == Dir::F ? "F" : "B"; }

enum class Kind : std::uint8_t { Bottom, Var, Neg, Or, DiaF, DiaB, Sharp };

inline bool is_diamond(Kind k) { return k == Kind::DiaF || k == Kind::DiaB; }
inline Dir diamond_dir(Kind k) { return k == Kind::DiaF ? Dir::F : Dir::B; }

struct Connective;

namespace detail {
struct Node;
}

// Hash-consed formula handle. Structurally equal formulas share one node, so
// equality is pointer equality. Nodes live for the whole process.
class Formula {
 public:
  Formula();  // ⊥

  Kind kind() const;
  const std::string& name() const;  // Var only
  Formula child() const;            // Neg, DiaF, DiaB
  Formula left() const;             // Or
  Formula right() const;            // Or
  const Connective& connective() const;  // Sharp only
  const std::shared_ptr<const Connective>& connective_ptr() const;
  std::span<const Formula> args() const;  // Sharp only

  // Interning serial; stable within a process run for a fixed construction order.
  std::size_t id() const;
  std::size_t size() const;
  const std::vector<std::string>& variables() const;  // sorted, free in this formula
  bool mentions(std::string_view var) const;
  bool has_sharp() const;

  friend bool operator==(const Formula& a, const Formula& b) { return a.node_ == b.node_; }
  friend bool operator!=(const Formula& a, const Formula& b) { return a.node_ != b.node_; }
  friend bool operator<(const Formula& a, const Formula& b);

 private:
  friend struct detail::Node;
  friend Formula make_node(Kind, std::string, std::vector<Formula>, std::shared_ptr<const Connective>);
  explicit Formula(const detail::Node* n) : node_(n) {}
  const detail::Node* node_;
};

struct FormulaHash {
  std::size_t operator()(const Formula& f) const { return std::hash<std::size_t>{}(f.id()); }
};

// Primitive constructors.
Formula bottom();
Formula var(std::string name);
Formula neg(Formula f);
Formula lor(Formula a, Formula b);
Formula dia(Dir d, Formula f);
Formula sharp(std::shared_ptr<const Connective> c, std::vector<Formula> args);

// Abbreviations, expanded into primitives.
Formula top();
Formula land(Formula a, Formula b);
Formula implies(Formula a, Formula b);
Formula iff(Formula a, Formula b);
Formula box(Dir d, Formula f);
Formula nabla(Dir d, const std::vector<Formula>& elems);
Formula big_or(const std::vector<Formula>& fs);   // left fold, ⊥ when empty
Formula big_and(const std::vector<Formula>& fs);  // left fold, ⊤ when empty

// Pattern views of the abbreviations. Each returns true and fills the out
// parameters when f is literally the expansion.
bool match_and(const Formula& f, Formula& a, Formula& b);  // ¬(¬a ∨ ¬b)
bool match_box(const Formula& f, Dir& d, Formula& a);      // ¬◇¬a
bool is_top(const Formula& f);

// ∼f: strips one negation, otherwise adds one.
Formula complement(const Formula& f);

// Simultaneous substitution of variables. Formulas have no binders, so this is
// plain structural replacement.
Formula substitute(const Formula& f, const std::map<std::string, Formula>& sigma);

// Number of nested modal operators; ♯ counts as unbounded (returns SIZE_MAX).
std::size_t modal_depth(const Formula& f);

inline constexpr const char* kRecVar = "x";
std::string param_name(std::size_t i);  // q1, q2, ...

}  // namespace flatmu
