#pragma once

#include <span>
#include <string>
#include <vector>

#include "eflfg/types.hpp"

namespace eflfg {

// Directed graph over model-vertices for one round. Out-neighborhoods are
// grown greedily per vertex under two constraints: the neighborhood's total
// cost stays within the budget, and (from round 2 on) its weight sum does not
// exceed the previous neighborhood's weight sum evaluated at current weights.
// Every vertex keeps a self-loop.
struct FeedbackGraph {
  int round = 1;
  std::vector<std::vector<ModelId>> out_neighbors;  // insertion order, self first
  std::vector<std::vector<ModelId>> in_neighbors;   // sorted
  std::vector<ModelId> dominating_set;              // greedy cover pick order
  std::vector<double> out_costs;        // per-vertex cumulative cost
  std::vector<double> out_weight_sums;  // per-vertex weight sum at build time

  int size() const { return static_cast<int>(out_neighbors.size()); }
  bool has_edge(ModelId from, ModelId to) const;
};

// Vertices that can still be appended to `current_out` of vertex k: not yet
// members, cost fits the budget, and the grown weight sum stays within
// `prev_weight_bound` (+inf on round 1). Ascending order.
std::vector<ModelId> candidate_set(ModelId k,
                                   const std::vector<ModelId>& current_out,
                                   std::span<const double> weights,
                                   std::span<const double> costs, double budget,
                                   double prev_weight_bound);

// argmax over candidates of w_i / (cost(current_out) + c_i); ties break to
// the lowest model index. Candidates must be non-empty.
ModelId select_candidate(const std::vector<ModelId>& candidates,
                         const std::vector<ModelId>& current_out,
                         std::span<const double> weights,
                         std::span<const double> costs);

// One round of graph generation. `prev` is null on round 1 (weight bound
// +inf). Requires budget >= max cost. Also derives in-neighborhoods and the
// greedy dominating set.
FeedbackGraph generate_feedback_graph(std::span<const double> weights,
                                      std::span<const double> costs,
                                      double budget, const FeedbackGraph* prev,
                                      int round);

// Greedy set cover over out-neighborhoods: every vertex ends up an
// out-neighbor of some member. Ties break to the lowest index.
std::vector<ModelId> greedy_dominating_set(
    const std::vector<std::vector<ModelId>>& out_neighbors);

// Exact maximum independent set size of the undirected support (self-loops
// dropped). Guarded: throws DiagnosticUnavailable above 25 vertices.
int independence_number(const FeedbackGraph& graph);

// Sum of weights over vertex k's out-neighborhood, in stored order.
double neighborhood_weight_sum(const FeedbackGraph& graph,
                               std::span<const double> weights, ModelId k);

// Adjacency text: one "k: j1 j2 ..." line per vertex plus a "D: ..." line.
std::string dump_graph(const FeedbackGraph& graph);

}  // namespace eflfg
