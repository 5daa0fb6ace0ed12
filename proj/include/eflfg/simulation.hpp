#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eflfg/config.hpp"
#include "eflfg/dataset.hpp"
#include "eflfg/feedback_graph.hpp"
#include "eflfg/model_zoo.hpp"
#include "eflfg/server.hpp"
#include "eflfg/types.hpp"

namespace eflfg {

// Everything produced in one learning round.
struct RoundRecord {
  int t = 0;
  ModelId drawn = -1;  // -1 for baselines without a node draw
  std::vector<ModelId> transmitted;
  std::vector<int> clients;
  double transmitted_cost = 0.0;
  std::vector<double> client_predictions;
  double realized_loss_mean = 0.0;         // mean unclipped squared error
  double realized_loss_sum_clipped = 0.0;  // summed clipped ensemble loss
  std::vector<double> member_summed_losses;     // clipped, zero outside S_t
  std::vector<double> loss_estimates;           // l_{k,t}
  std::vector<double> ensemble_loss_estimates;  // lhat_{k,t}
  std::vector<double> pmf;                      // empty for baselines
  std::vector<double> observation_probs;        // empty for baselines
  // Exact conditional expectation of the ensemble loss over the node draw;
  // needs the oracle channel (all-model predictions).
  std::optional<double> expected_ensemble_loss;
  int dominating_set_size = -1;  // -1 when no graph was built
  std::optional<int> independence;
  double jensen_margin = 0.0;  // max_i { ensemble loss - member mean }, <= 0
};

struct ExperimentTrace {
  std::string algorithm;
  std::string dataset_name;
  std::uint64_t seed = 0;
  std::string config_json;
  double budget = 0.0;
  int rounds_planned = 0;
  int model_count = 0;
  std::vector<RoundRecord> records;
  // Full-information channel, invisible to the learner: summed clipped loss
  // of every model on the round's clients. Present iff the oracle flag is on.
  std::vector<std::vector<double>> oracle_member_losses;
  std::vector<double> mse_series;  // prefix-averaged MSE_t
  std::string graph_dump_text;     // filled when the graph-dump flag is on

  bool has_oracle() const { return !oracle_member_losses.empty(); }
};

// N_t = min(n_max, floor(b_t / (b_loss * (out_degree + 1)))): each client
// reports one loss per transmitted model plus the ensemble loss. A floor of
// zero means the round cannot run and raises BandwidthError.
int client_count(double bandwidth_total, double bandwidth_loss, int out_degree,
                 int n_max);

// Uniform without-replacement subset of [0, n_total), sorted.
std::vector<int> select_clients(int n_t, int n_total, std::mt19937_64& rng);

struct RoundContext {
  const ModelCatalog* catalog = nullptr;
  const ClientStream* stream = nullptr;
  double budget = 0.0;
  double bandwidth_total = 0.0;
  double bandwidth_loss = 1.0;
  int n_max = 1;
  bool oracle = false;
  bool alpha_diagnostic = false;
};

struct RoundOutput {
  ServerState state;
  FeedbackGraph graph;
  RoundRecord record;
  std::vector<double> oracle_losses;  // per-model, oracle channel only
};

// One full round: graph, node draw, client selection, losses, importance
// sampling estimates, weight update.
RoundOutput run_round(const ServerState& state, const FeedbackGraph* prev,
                      int t, const RoundContext& ctx, std::mt19937_64& node_rng,
                      std::mt19937_64& client_rng);

// Dataset, split, and trained catalog for one seed; shared across the
// algorithms of a run.
struct ExperimentSetup {
  ModelCatalog catalog;
  ClientStream stream;
  std::string dataset_name;
  std::string config_json;
};

ExperimentSetup prepare_experiment(const ExperimentConfig& config,
                                   std::uint64_t seed);

// Runs one (algorithm, seed) combination end to end. Dispatches baselines.
ExperimentTrace run_experiment(const ExperimentConfig& config, Algorithm algo,
                               std::uint64_t seed);
ExperimentTrace run_experiment_with_setup(const ExperimentConfig& config,
                                          Algorithm algo, std::uint64_t seed,
                                          const ExperimentSetup& setup);

// MSE_t = (1/t) sum_{tau<=t} mean-over-clients squared error, 1 <= t <= T.
double mse_at(const ExperimentTrace& trace, int t);

struct RegretSeries {
  std::vector<double> regret;  // R_1..R_T
  ModelId best_model = -1;     // k* at the horizon
};

// Cumulative expected ensemble loss minus the best fixed model's cumulative
// full-information loss. Needs the oracle channel.
RegretSeries cumulative_regret(const ExperimentTrace& trace);

// Fraction of rounds with transmitted cost strictly above the budget.
double budget_violation_rate(const ExperimentTrace& trace, double budget);

// Trace CSV: one row per round, header mandatory, floats at 9 significant
// digits. Optional per-model estimate columns.
void write_trace_csv(std::ostream& out, const ExperimentTrace& trace,
                     bool per_model_estimates);
std::string trace_to_csv(const ExperimentTrace& trace,
                         bool per_model_estimates);

}  // namespace eflfg
