#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "flatmu/network.hpp"
#include "flatmu/semantics.hpp"

namespace flatmu {

struct Budget {
  std::size_t max_nodes = 200;
  std::size_t max_depth = 6;
  std::size_t max_rounds = 8;
};

enum class StuckReason { NoCoherentAtom, TreeSearchFailed, Budget };
const char* to_string(StuckReason r);

class Stuck : public std::runtime_error {
 public:
  Stuck(StuckReason reason, Defect defect, const std::string& msg)
      : std::runtime_error(msg), reason_(reason), defect_(defect) {}
  StuckReason reason() const { return reason_; }
  const Defect& defect() const { return defect_; }

 private:
  StuckReason reason_;
  Defect defect_;
};

struct RepairRecord {
  std::size_t round = 0;
  Defect defect;
  std::size_t nodes_after = 0;
};

struct ResidualDefect {
  Defect defect;
  std::size_t distance = 0;  // undirected distance from the root
};

struct ConstructionReport {
  enum class Verdict { Perfect, PerfectUpToRadius, Stuck };
  Network network;
  Atom atom;
  std::size_t rounds_completed = 0;
  std::vector<RepairRecord> repairs;
  std::vector<ResidualDefect> residual;
  Verdict verdict = Verdict::Stuck;
  std::size_t radius = 0;  // PerfectUpToRadius
  std::optional<Defect> stuck_defect;
  std::optional<StuckReason> stuck_reason;
  std::string stuck_message;
  std::vector<long> radius_history;  // per completed round, -1 if the root is defective
  std::vector<Network> snapshots;    // after each completed round
};

const char* to_string(ConstructionReport::Verdict v);

// Nodes within undirected distance r of root, with their distances.
std::map<NodeId, std::size_t> distances_from(const Network& n, NodeId root);

// One construction session: owns the fresh-node counter and the tree-search
// memo, so grafts made in one session never collide.
class Constructor {
 public:
  explicit Constructor(std::shared_ptr<const ClosureContext> ctx, Budget budget = {});

  // Fresh ids are drawn above n's largest id from now on.
  void reserve_ids(const Network& n);

  Network saturate(const Network& n, NodeId u, Dir d);
  Network normalize_heads(const Network& n, Dir d);
  Network finish_deferral(const Network& n, NodeId u, std::size_t deferral);
  Network repair_all(const Network& n);
  ConstructionReport build(const Atom& atom);

  const Budget& budget() const { return budget_; }

 private:
  struct Tree {
    struct Node {
      Atom label;
      bool saturated = false;
      std::vector<std::size_t> children;
    };
    std::vector<Node> nodes;  // nodes[0] is the root
  };
  struct Memo {
    std::optional<Tree> success;
    std::size_t success_depth = 0;
    long failed_depth = -1;
  };
  struct MemoKey {
    Atom atom;
    std::size_t deferral;
    bool operator==(const MemoKey&) const = default;
  };
  struct MemoKeyHash {
    std::size_t operator()(const MemoKey& k) const { return atom_hash(k.atom) * 31 + k.deferral; }
  };

  NodeId fresh() { return next_++; }
  void check_budget(const Network& n, const Defect& d) const;
  std::vector<const Atom*> candidates(const Atom& from, std::size_t phi, Dir d) const;
  bool leaf_ok(const Deferral::Ref& r, const Atom& b) const;

  std::optional<Tree> tree_search(const Atom& a, std::size_t deferral, std::size_t depth);
  std::optional<Tree> tree_search_uncached(const Atom& a, std::size_t deferral, std::size_t depth);
  std::optional<Tree> child_tree(const Atom& b, const Deferral::Ref& r, std::size_t depth);
  Network graft(const Network& n, NodeId u, const Tree& t, Dir d);
  Network fin(const Network& n, NodeId u, std::size_t deferral, std::vector<std::pair<NodeId, std::size_t>>& stack);
  bool finished(const Network& n, NodeId u, std::size_t deferral) const;

  std::shared_ptr<const ClosureContext> ctx_;
  Budget budget_;
  NodeId next_ = 0;
  std::unordered_map<MemoKey, Memo, MemoKeyHash> memo_;
  std::vector<std::pair<std::size_t, Atom>> in_progress_;
  bool cut_ = false;
  // Latest network reached by a completed repair step.
  std::optional<Network> last_good_;
  std::vector<RepairRecord>* log_ = nullptr;
  std::size_t round_ = 0;
};

// Stand-alone forms; each runs in a fresh session whose ids start above n's.
Network saturate_forward(const Network& n, NodeId u);
Network saturate_backward(const Network& n, NodeId u);
Network normalize_heads(const Network& n, Dir d);
Network finish_deferral(const Network& n, NodeId u, std::size_t deferral, const Budget& b = {});
Network repair_all(const Network& n, const Budget& b = {});
ConstructionReport build(std::shared_ptr<const ClosureContext> ctx, const Atom& atom, const Budget& b = {});

// States are the nodes in increasing id order.
KripkeModel extract_model(const Network& n);

struct TruthFailure {
  NodeId node;
  std::size_t formula;  // closure index
};
// Label formulas that fail at their node in the induced model. With a radius,
// only the root's ♯-free label formulas of modal depth ≤ radius are checked.
std::vector<TruthFailure> truth_lemma_failures(const Network& n, std::optional<std::size_t> radius = std::nullopt,
                                               NodeId root = 0);

}  // namespace flatmu
