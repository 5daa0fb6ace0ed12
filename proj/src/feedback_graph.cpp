#include "eflfg/feedback_graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace eflfg {

namespace {

constexpr double kWeightFloor = 1e-300;

double floored(double w) { return std::max(w, kWeightFloor); }

void check_inputs(std::span<const double> weights,
                  std::span<const double> costs, double budget) {
  if (weights.size() != costs.size() || weights.empty()) {
    throw std::invalid_argument("feedback graph: weight/cost size mismatch");
  }
  for (double c : costs) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ConfigError("feedback graph: costs must be positive and finite");
    }
    if (c > budget) {
      throw ConfigError(
          "feedback graph: budget must cover every model cost (budget " +
          std::to_string(budget) + " < cost " + std::to_string(c) + ")");
    }
  }
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw NumericError("feedback graph: weights must be finite and >= 0");
    }
  }
}

}  // namespace

bool FeedbackGraph::has_edge(ModelId from, ModelId to) const {
  const auto& out = out_neighbors[static_cast<std::size_t>(from)];
  return std::find(out.begin(), out.end(), to) != out.end();
}

std::vector<ModelId> candidate_set(ModelId k,
                                   const std::vector<ModelId>& current_out,
                                   std::span<const double> weights,
                                   std::span<const double> costs, double budget,
                                   double prev_weight_bound) {
  double out_cost = 0.0;
  double out_weight = 0.0;
  for (ModelId j : current_out) {
    out_cost += costs[static_cast<std::size_t>(j)];
    out_weight += weights[static_cast<std::size_t>(j)];
  }
  std::vector<ModelId> candidates;
  const int n = static_cast<int>(weights.size());
  for (ModelId i = 0; i < n; ++i) {
    if (std::find(current_out.begin(), current_out.end(), i) !=
        current_out.end()) {
      continue;
    }
    if (out_cost + costs[static_cast<std::size_t>(i)] > budget) continue;
    if (out_weight + weights[static_cast<std::size_t>(i)] > prev_weight_bound) {
      continue;
    }
    candidates.push_back(i);
  }
  (void)k;
  return candidates;
}

ModelId select_candidate(const std::vector<ModelId>& candidates,
                         const std::vector<ModelId>& current_out,
                         std::span<const double> weights,
                         std::span<const double> costs) {
  if (candidates.empty()) {
    throw std::invalid_argument("select_candidate: empty candidate set");
  }
  double out_cost = 0.0;
  for (ModelId j : current_out) out_cost += costs[static_cast<std::size_t>(j)];
  ModelId best = candidates.front();
  double best_ratio = -1.0;
  for (ModelId i : candidates) {
    const double ratio = floored(weights[static_cast<std::size_t>(i)]) /
                         (out_cost + costs[static_cast<std::size_t>(i)]);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i;
    }
  }
  return best;
}

FeedbackGraph generate_feedback_graph(std::span<const double> weights,
                                      std::span<const double> costs,
                                      double budget, const FeedbackGraph* prev,
                                      int round) {
  check_inputs(weights, costs, budget);
  const int n = static_cast<int>(weights.size());
  FeedbackGraph g;
  g.round = round;
  g.out_neighbors.resize(n);
  g.in_neighbors.resize(n);
  g.out_costs.resize(n);
  g.out_weight_sums.resize(n);

  std::vector<char> member(n);
  for (ModelId k = 0; k < n; ++k) {
    const double bound =
        prev ? neighborhood_weight_sum(*prev, weights, k)
             : std::numeric_limits<double>::infinity();
    auto& out = g.out_neighbors[static_cast<std::size_t>(k)];
    std::fill(member.begin(), member.end(), 0);
    out.push_back(k);
    member[static_cast<std::size_t>(k)] = 1;
    double out_cost = costs[static_cast<std::size_t>(k)];
    double out_weight = weights[static_cast<std::size_t>(k)];
    for (;;) {
      ModelId best = -1;
      double best_ratio = -1.0;
      for (ModelId i = 0; i < n; ++i) {
        if (member[static_cast<std::size_t>(i)]) continue;
        const double c = costs[static_cast<std::size_t>(i)];
        const double w = weights[static_cast<std::size_t>(i)];
        if (out_cost + c > budget) continue;
        if (out_weight + w > bound) continue;
        const double ratio = floored(w) / (out_cost + c);
        if (ratio > best_ratio) {
          best_ratio = ratio;
          best = i;
        }
      }
      if (best < 0) break;
      out.push_back(best);
      member[static_cast<std::size_t>(best)] = 1;
      out_cost += costs[static_cast<std::size_t>(best)];
      out_weight += weights[static_cast<std::size_t>(best)];
    }
    g.out_costs[static_cast<std::size_t>(k)] = out_cost;
    g.out_weight_sums[static_cast<std::size_t>(k)] = out_weight;
  }

  for (ModelId k = 0; k < n; ++k) {
    for (ModelId j : g.out_neighbors[static_cast<std::size_t>(k)]) {
      g.in_neighbors[static_cast<std::size_t>(j)].push_back(k);
    }
  }
  for (auto& in : g.in_neighbors) std::sort(in.begin(), in.end());

  g.dominating_set = greedy_dominating_set(g.out_neighbors);
  return g;
}

std::vector<ModelId> greedy_dominating_set(
    const std::vector<std::vector<ModelId>>& out_neighbors) {
  const int n = static_cast<int>(out_neighbors.size());
  std::vector<char> covered(n, 0);
  int remaining = n;
  std::vector<ModelId> dominating;
  while (remaining > 0) {
    ModelId best = -1;
    int best_gain = -1;
    for (ModelId k = 0; k < n; ++k) {
      int gain = 0;
      for (ModelId j : out_neighbors[static_cast<std::size_t>(k)]) {
        if (!covered[static_cast<std::size_t>(j)]) ++gain;
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = k;
      }
    }
    if (best_gain <= 0) {
      // Self-loops make this unreachable; guard against malformed input.
      throw std::logic_error("greedy_dominating_set: no progress");
    }
    dominating.push_back(best);
    for (ModelId j : out_neighbors[static_cast<std::size_t>(best)]) {
      if (!covered[static_cast<std::size_t>(j)]) {
        covered[static_cast<std::size_t>(j)] = 1;
        --remaining;
      }
    }
  }
  return dominating;
}

namespace {

int max_independent_set(std::uint32_t remaining,
                        const std::vector<std::uint32_t>& adj) {
  if (remaining == 0) return 0;
  // Branch on the highest-degree remaining vertex.
  int pivot = -1;
  int pivot_degree = -1;
  for (std::uint32_t bits = remaining; bits;) {
    const int v = std::countr_zero(bits);
    bits &= bits - 1;
    const int deg = std::popcount(adj[static_cast<std::size_t>(v)] & remaining);
    if (deg > pivot_degree) {
      pivot_degree = deg;
      pivot = v;
    }
  }
  if (pivot_degree == 0) return std::popcount(remaining);  // edgeless
  const std::uint32_t bit = 1u << pivot;
  const int without = max_independent_set(remaining & ~bit, adj);
  const int with_pivot =
      1 + max_independent_set(
              remaining & ~(adj[static_cast<std::size_t>(pivot)] | bit), adj);
  return std::max(without, with_pivot);
}

}  // namespace

int independence_number(const FeedbackGraph& graph) {
  const int n = graph.size();
  if (n > 25) {
    throw DiagnosticUnavailable(
        "independence_number: exact search guarded at 25 vertices, got " +
        std::to_string(n));
  }
  std::vector<std::uint32_t> adj(n, 0);
  for (ModelId k = 0; k < n; ++k) {
    for (ModelId j : graph.out_neighbors[static_cast<std::size_t>(k)]) {
      if (j == k) continue;
      adj[static_cast<std::size_t>(k)] |= 1u << j;
      adj[static_cast<std::size_t>(j)] |= 1u << k;
    }
  }
  const std::uint32_t all = (1u << n) - 1u;
  return max_independent_set(all, adj);
}

double neighborhood_weight_sum(const FeedbackGraph& graph,
                               std::span<const double> weights, ModelId k) {
  double sum = 0.0;
  for (ModelId j : graph.out_neighbors[static_cast<std::size_t>(k)]) {
    sum += weights[static_cast<std::size_t>(j)];
  }
  return sum;
}

std::string dump_graph(const FeedbackGraph& graph) {
  std::ostringstream out;
  for (ModelId k = 0; k < graph.size(); ++k) {
    out << k << ":";
    for (ModelId j : graph.out_neighbors[static_cast<std::size_t>(k)]) {
      out << ' ' << j;
    }
    out << '\n';
  }
  out << "D:";
  for (ModelId d : graph.dominating_set) out << ' ' << d;
  out << '\n';
  return out.str();
}

}  // namespace eflfg
