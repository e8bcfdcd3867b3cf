#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flatmu/formula.hpp"

namespace flatmu {

enum class Disjunctive : std::uint8_t { Forward, Backward, None };

const char* to_string(Disjunctive d);

// Nabla-normal reading of a connective body. Every node keeps the body
// subformula it was read from (src); x-free subformulas are leaves.
//   Dia(ψ) stands for ∇{ψ,⊤}, Box(ψ) for ∇∅ ∨ ∇{ψ}.
struct ViewNode {
  enum class Kind : std::uint8_t { Leaf, X, Or, And, Dia, Box, Nabla };
  Kind kind;
  Formula src;
  Formula theta;              // And: the x-free conjunct
  std::vector<int> children;  // Or: 2; And/Dia/Box: 1 (x side); Nabla: elements
};

struct DisjunctiveView {
  Dir dir = Dir::F;
  std::vector<ViewNode> nodes;
  int root = -1;
  std::vector<int> preorder;  // x-containing nodes, first-visit order, deduplicated by src
};

// Reads body as a member of the dir-disjunctive grammar; nullopt when it is not.
std::optional<DisjunctiveView> disjunctive_view(const Formula& body, Dir dir);

struct Connective {
  std::string name;
  std::size_t arity = 0;
  Formula body;
  bool guarded = false;
  Disjunctive disjunctive = Disjunctive::None;
  std::optional<DisjunctiveView> view;  // set iff disjunctive != None
};

// Validates body (variables within {x, q1..qn}, ♯-free, positive in x) and
// computes the analysis flags.
std::shared_ptr<const Connective> make_connective(std::string name, std::size_t arity, Formula body);

class ConnectiveTable {
 public:
  void add(std::shared_ptr<const Connective> c);
  std::shared_ptr<const Connective> find(std::string_view name) const;
  const std::map<std::string, std::shared_ptr<const Connective>, std::less<>>& all() const { return table_; }
  bool empty() const { return table_.empty(); }

 private:
  std::map<std::string, std::shared_ptr<const Connective>, std::less<>> table_;
};

class SyntaxError : public std::runtime_error {
 public:
  enum class Code { Syntax, UnknownConnective, ArityMismatch };
  SyntaxError(Code code, std::size_t pos, const std::string& msg);
  Code code() const { return code_; }
  std::size_t position() const { return pos_; }

 private:
  Code code_;
  std::size_t pos_;
};

Formula parse(std::string_view text, const ConnectiveTable& table = {});
std::string print(const Formula& f);

bool is_positive_in(const Formula& f, std::string_view v);
bool is_guarded(const Connective& c);
bool is_guarded_body(const Formula& body);
Disjunctive classify_disjunctive(const Connective& c);

struct GuardificationResult {
  Formula gamma1;
  std::shared_ptr<const Connective> gamma2;
  Formula equivalence;  // χ ↔ (x ∧ γ1) ∨ γ2
};

GuardificationResult guardify(const Connective& c);

// Connectives occurring in f, in first-occurrence order.
std::vector<std::shared_ptr<const Connective>> connectives_of(const Formula& f);

using GuardMap = std::map<const Connective*, std::shared_ptr<const Connective>>;

// Guardifies every connective of f that is not already guarded; guarded ones
// map to themselves.
GuardMap guard_map_for(const Formula& f);
Formula translate_guarded(const Formula& f, const GuardMap& map);

// Connective definitions: a JSON array of {"name", "arity", "body"} objects
// (or an object with a "connectives" array). Later bodies may not use ♯.
ConnectiveTable load_connectives_json(std::string_view json_text);
ConnectiveTable load_connectives_file(const std::string& path);

}  // namespace flatmu
