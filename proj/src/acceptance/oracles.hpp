#pragma once

// Reference implementations used only to check the library. They follow the
// textbook definitions directly and trade speed for obviousness.

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flatmu/construct.hpp"
#include "flatmu/network.hpp"
#include "flatmu/semantics.hpp"

namespace flatmu::oracle {

using States = std::vector<char>;

struct SmallModel {
  std::size_t n = 0;
  std::vector<std::vector<char>> rel;  // rel[i][j]: edge i -> j
  std::map<std::string, States> val;
};

SmallModel from_kripke(const KripkeModel& m);
SmallModel lane_model(const Frame& f, const LaneValuation& v, std::size_t lane);

// Set semantics by structural recursion. ♯ is the intersection of all
// prefixpoints when the model has at most 6 states, Kleene iteration from ∅
// otherwise.
States naive_eval(const Formula& f, const SmallModel& m);
// Least fixpoint of body(x, q1..qn): the intersection of all prefixpoints up to
// 6 states, Kleene iteration beyond.
States lfp_by_prefixpoints(const Connective& c, const std::vector<States>& args, const SmallModel& m);

// Every relation mask on n states, every valuation of vars, 64 valuations per call.
void for_each_model(std::size_t n, const std::vector<std::string>& vars,
                    const std::function<void(const Frame&, const LaneValuation&)>& fn);
// count frames on min_n..max_n states, edge probability 0.3, one valuation each.
void for_each_random_model(std::size_t count, std::size_t min_n, std::size_t max_n,
                           const std::vector<std::string>& vars, std::uint64_t seed,
                           const std::function<void(const Frame&, const LaneValuation&)>& fn);

// Graph oracles on networks.
NodeSet up_closure(const Network& n, const NodeSet& x);
NodeSet down_closure(const Network& n, const NodeSet& x);
bool at_most_one_path(const Network& n);
bool contains_def(const Network& a, const Network& b);    // a ⊆ b
bool subnetwork_def(const Network& a, const Network& b);  // a ⊑ b
bool down_cofinal_def(const Network& a, const Network& b);
bool up_cofinal_def(const Network& a, const Network& b);
bool same(const Network& a, const Network& b);
Network restrict_def(const Network& n, const NodeSet& x);
Network union_def(const std::vector<Network>& parts);
bool equp_def(const Network& a, const Network& b, const NodeSet& x);
bool eqdown_def(const Network& a, const Network& b, const NodeSet& x);

// Timeouts by the recursive "finished in k steps" definition, trying k upwards.
TimeoutTable timeouts_def(const Network& n);

// x occurs only under modalities.
bool guarded_def(const Formula& body);

// Random Σ-networks: an undirected forest with coherent labels, so acyclic and
// anticonfluent. Saturation marks are added only where already witnessed.
Network random_forest(const std::shared_ptr<const ClosureContext>& ctx, std::size_t max_nodes, std::mt19937_64& rng,
                      NodeId first_id = 0);
// Random DAG over the same labels, ignoring coherence; for path-shape checks.
Network random_dag(const std::shared_ptr<const ClosureContext>& ctx, std::size_t nodes, double p, std::mt19937_64& rng);
// Adds up to k fresh nodes next to unsaturated nodes of `allowed` (and to the
// fresh nodes themselves), dir F adds successors, B predecessors.
Network grow(const Network& n, const NodeSet& allowed, Dir dir, std::size_t k, std::mt19937_64& rng, NodeId& next_id);

}  // namespace flatmu::oracle
