#pragma once

#include <random>
#include <span>
#include <vector>

#include "eflfg/feedback_graph.hpp"
#include "eflfg/model_zoo.hpp"
#include "eflfg/types.hpp"

namespace eflfg {

// Multiplicative-weights state. w drives graph construction and ensemble
// mixing, u drives the node draw. Both start at 1 and stay strictly positive.
struct ServerState {
  std::vector<double> w;
  std::vector<double> u;
  double eta = 0.0;  // learning rate, > 0
  double xi = 0.0;   // exploration rate, in [0,1)
  int round = 1;

  static ServerState init(int model_count, double eta, double xi);
};

// Everything the server decides before clients are contacted.
struct RoundDecision {
  std::vector<double> pmf;
  ModelId drawn = -1;
  std::vector<ModelId> transmitted;       // out-neighborhood of the drawn node
  std::vector<double> ensemble_weights;   // w over transmitted, normalized
};

// p_k = (1-xi) * u_k / U + (xi / |D|) * [k in D]. Sums to 1.
std::vector<double> compute_pmf(const ServerState& state,
                                const std::vector<ModelId>& dominating);

// Categorical draw by inverse CDF on the given stream.
ModelId draw_node(std::span<const double> pmf, std::mt19937_64& rng);

// q_k: probability that model k is transmitted, i.e. the pmf mass of k's
// in-neighborhood. Always >= p_k thanks to the self-loop.
double observation_probability(const FeedbackGraph& graph,
                               std::span<const double> pmf, ModelId k);

// Normalized w restricted to `transmitted`; sums to 1.
std::vector<double> ensemble_weights(std::span<const double> w,
                                     const std::vector<ModelId>& transmitted);

// Weighted ensemble prediction over the transmitted set.
double ensemble_predict(const ServerState& state,
                        const std::vector<ModelId>& transmitted,
                        const ModelCatalog& catalog, std::span<const double> x);

// Importance-sampling estimates: observed summed loss divided by its
// observation probability, zero when unobserved.
double estimate_model_loss(double summed_loss, double q_k, bool in_transmitted);
double estimate_ensemble_loss(double summed_loss, double p_k, bool is_drawn);

// w_k <- w_k exp(-eta l_k), u_k <- u_k exp(-eta lhat_k), round incremented.
// Each vector is rescaled by a common factor if its max underflows 1e-100;
// the rescale leaves the pmf, the ensemble weights, and the graph argmax
// unchanged. Individual weights are floored at 1e-300.
ServerState update_weights(ServerState state, std::span<const double> losses,
                           std::span<const double> ensemble_losses);

// Exact conditional expectation of the round's ensemble loss over the node
// draw: sum_k p_k * per_node_losses[k].
double expected_round_loss(std::span<const double> pmf,
                           std::span<const double> per_node_losses);

}  // namespace eflfg
