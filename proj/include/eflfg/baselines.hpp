#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "eflfg/model_zoo.hpp"
#include "eflfg/simulation.hpp"
#include "eflfg/types.hpp"

namespace eflfg {

// Comparator state: multiplicative mixture weights plus, for the
// fedboost-style surrogate, the last round's inclusion probabilities.
struct BaselineState {
  std::vector<double> mix_weights;
  double eta = 0.0;
  std::vector<double> inclusion;  // pi_k, fedboost only
  int round = 1;

  static BaselineState init(int model_count, double eta);
};

// Inclusion probabilities pi_k = min(1, gamma * w_k / sum w) with gamma
// chosen by bisection so that sum_k pi_k c_k equals the budget; all ones when
// the whole catalog fits.
std::vector<double> fedboost_inclusion(std::span<const double> mix_weights,
                                       std::span<const double> costs,
                                       double budget);

struct BaselineRoundOutput {
  BaselineState state;
  RoundRecord record;
  std::vector<double> oracle_losses;
};

// Transmits every model (cost recorded, budget deliberately not enforced) and
// updates weights on full-information losses.
BaselineRoundOutput full_ensemble_round(const BaselineState& state, int t,
                                        const RoundContext& ctx,
                                        std::mt19937_64& client_rng);

// Budget-in-expectation comparator: each model is included independently with
// probability pi_k, losses are inverse-propensity corrected, and the realized
// cost may exceed the budget. An empty draw transmits nothing: clients fall
// back to the constant prediction 0.5 and no update happens that round.
BaselineRoundOutput fedboost_round(const BaselineState& state, int t,
                                   const RoundContext& ctx,
                                   std::mt19937_64& sample_rng,
                                   std::mt19937_64& client_rng);

// argmin over models of cumulative full-information loss; ties break to the
// lowest index. Returns the winner and its cumulative loss series.
std::pair<ModelId, std::vector<double>> best_fixed_model(
    const std::vector<std::vector<double>>& oracle_losses);

// T-round loop for the comparator algorithms, sharing the trace schema with
// the main simulator.
ExperimentTrace run_baseline_loop(const ExperimentConfig& config,
                                  Algorithm algo, std::uint64_t seed,
                                  const ExperimentSetup& setup);

}  // namespace eflfg
