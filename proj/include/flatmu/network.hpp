#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flatmu/closure.hpp"

namespace flatmu {

using NodeId = std::uint32_t;
using NodeSet = std::set<NodeId>;

// Σ for a root formula together with its deferral table and (lazily) its atoms.
class ClosureContext {
 public:
  explicit ClosureContext(Formula root);

  const Formula& root() const { return sigma_.origin(); }
  const ClosureSet& sigma() const { return sigma_; }
  const DeferralTable& deferrals() const { return deferrals_; }
  // Successors attached per ◇ formula. The truth lemma needs at least one.
  std::size_t copies() const { return std::max<std::size_t>(1, deferrals_.size()); }
  const std::vector<Atom>& atoms() const;
  // Atoms left after repeatedly discarding those with a ◇ formula that no
  // remaining atom can witness coherently. No perfect network uses the others.
  const std::vector<Atom>& viable_atoms() const;
  // Viable atoms ordered by number of ◇ members, then atom order. The
  // construction picks the first fitting one, so fresh nodes demand as few
  // further neighbours as possible.
  const std::vector<const Atom*>& preference() const;

 private:
  ClosureSet sigma_;
  DeferralTable deferrals_;
  mutable std::once_flag atoms_once_;
  mutable std::vector<Atom> atoms_;
  mutable std::once_flag viable_once_;
  mutable std::vector<Atom> viable_;
  mutable std::once_flag pref_once_;
  mutable std::vector<const Atom*> pref_;
};

std::shared_ptr<const ClosureContext> make_context(Formula root);

class Network {
 public:
  explicit Network(std::shared_ptr<const ClosureContext> ctx);

  const ClosureContext& context() const { return *ctx_; }
  const std::shared_ptr<const ClosureContext>& context_ptr() const { return ctx_; }
  const ClosureSet& sigma() const { return ctx_->sigma(); }

  std::size_t size() const { return labels_.size(); }
  bool contains(NodeId u) const { return labels_.count(u) != 0; }
  const std::map<NodeId, Atom>& labels() const { return labels_; }
  const Atom& label(NodeId u) const { return labels_.at(u); }
  NodeSet nodes() const;
  const NodeSet& successors(NodeId u) const { return succ_.at(u); }
  const NodeSet& predecessors(NodeId u) const { return pred_.at(u); }
  const NodeSet& neighbors(NodeId u, Dir d) const { return d == Dir::F ? succ_.at(u) : pred_.at(u); }
  bool has_edge(NodeId u, NodeId v) const { return contains(u) && succ_.at(u).count(v) != 0; }
  std::vector<std::pair<NodeId, NodeId>> edges() const;
  std::size_t edge_count() const;
  const NodeSet& saturated(Dir d) const { return d == Dir::F ? sat_f_ : sat_p_; }
  bool is_saturated(NodeId u, Dir d) const { return saturated(d).count(u) != 0; }
  // One past the largest node id, 0 when empty.
  NodeId next_id() const { return labels_.empty() ? 0 : labels_.rbegin()->first + 1; }

  void add_node(NodeId u, Atom label);  // no-op if present with the same label
  void add_edge(NodeId u, NodeId v);
  void mark_saturated(NodeId u, Dir d);

  friend bool operator==(const Network& a, const Network& b);

 private:
  std::shared_ptr<const ClosureContext> ctx_;
  std::map<NodeId, Atom> labels_;
  std::map<NodeId, NodeSet> succ_, pred_;
  NodeSet sat_f_, sat_p_;
};

struct Violation {
  enum class Kind { Cycle, NotAtom, Incoherent, ForwardSaturation, BackwardSaturation };
  Kind kind;
  NodeId node = 0;
  NodeId other = 0;
  std::string message;
};

const char* to_string(Violation::Kind k);

// Empty iff N is a Σ-network.
std::vector<Violation> validate(const Network& n);
bool is_acyclic(const Network& n);
// No two distinct directed paths share both endpoints.
bool is_anticonfluent(const Network& n);
// Whether u ∈ S_dir has, for every ◇φ in its label, copies distinct
// same-labelled dir-neighbours containing φ, all distinct across formulas.
bool witnesses_saturation(const Network& n, NodeId u, Dir d);

bool is_contained(const Network& a, const Network& b);  // a ⊆ b
bool is_subnetwork(const Network& a, const Network& b);  // a ⊑ b
// Throws std::invalid_argument on label disagreement or mixed closures.
Network network_union(const std::vector<Network>& parts);
Network restrict(const Network& n, const NodeSet& x);
Network complement(const Network& n, const NodeSet& x);  // N \ X
NodeSet upgen(const Network& n, const NodeSet& x);
NodeSet downgen(const Network& n, const NodeSet& x);
bool equp(const Network& a, const Network& b, const NodeSet& x);
bool eqdown(const Network& a, const Network& b, const NodeSet& x);
inline bool equp(const Network& a, const Network& b, NodeId u) { return equp(a, b, NodeSet{u}); }
inline bool eqdown(const Network& a, const Network& b, NodeId u) { return eqdown(a, b, NodeSet{u}); }
bool is_up_cofinal(const Network& a, const Network& b);
bool is_down_cofinal(const Network& a, const Network& b);

class AmalgamationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// dir F: the extensions grow upwards from u_i (N ≡↑ N_i, N down-cofinal in
// N_i); dir B is the mirror. Preconditions are checked and postconditions
// asserted; violations throw AmalgamationError naming the condition.
Network amalgamate(const Network& base, const std::vector<std::pair<NodeId, Network>>& parts, Dir dir = Dir::F);

// Timeout of every active (node, deferral) pair; nullopt = unfinished.
using TimeoutTable = std::map<std::pair<NodeId, std::size_t>, std::optional<std::size_t>>;
TimeoutTable compute_timeouts(const Network& n);
// Whether the deferral's instantiation is in u's label.
bool is_active(const Network& n, NodeId u, std::size_t deferral);

struct Defect {
  enum class Kind { DiaF, DiaB, Mu };
  Kind kind;
  NodeId node = 0;
  std::size_t deferral = 0;  // Mu only
  friend bool operator==(const Defect&, const Defect&) = default;
};

const char* to_string(Defect::Kind k);
std::vector<Defect> find_defects(const Network& n);
std::vector<Defect> find_defects(const Network& n, const TimeoutTable& t);

}  // namespace flatmu
