#include "eflfg/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eflfg/baselines.hpp"
#include "eflfg/rng.hpp"

namespace eflfg {

namespace {

// Slack for the per-round Jensen check; the acceptance suite separately holds
// recorded margins to the strict 1e-12.
constexpr double kJensenSlack = 1e-12;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

int client_count(double bandwidth_total, double bandwidth_loss, int out_degree,
                 int n_max) {
  if (!(bandwidth_total > 0.0) || !(bandwidth_loss > 0.0) || out_degree < 0 ||
      n_max < 1) {
    throw std::invalid_argument("client_count: invalid arguments");
  }
  const double slots = bandwidth_total /
                       (bandwidth_loss * static_cast<double>(out_degree + 1));
  const long floor_clients = static_cast<long>(std::floor(slots));
  if (floor_clients < 1) {
    throw BandwidthError(
        "bandwidth admits no client: floor(" + format_real(bandwidth_total) +
        " / (" + format_real(bandwidth_loss) + " * " +
        std::to_string(out_degree + 1) + ")) = 0");
  }
  return static_cast<int>(std::min<long>(n_max, floor_clients));
}

std::vector<int> select_clients(int n_t, int n_total, std::mt19937_64& rng) {
  if (n_t < 1 || n_t > n_total) {
    throw std::invalid_argument("select_clients: need 1 <= n_t <= n_total");
  }
  auto ids = sample_without_replacement(n_t, n_total, rng);
  std::sort(ids.begin(), ids.end());
  return ids;
}

RoundOutput run_round(const ServerState& state, const FeedbackGraph* prev,
                      int t, const RoundContext& ctx, std::mt19937_64& node_rng,
                      std::mt19937_64& client_rng) {
  const ModelCatalog& catalog = *ctx.catalog;
  const ClientStream& stream = *ctx.stream;
  const int model_count = catalog.size();

  RoundOutput out;
  out.graph = generate_feedback_graph(state.w, catalog.costs, ctx.budget, prev,
                                      t);
  RoundRecord& rec = out.record;
  rec.t = t;
  rec.pmf = compute_pmf(state, out.graph.dominating_set);
  rec.drawn = draw_node(rec.pmf, node_rng);
  rec.transmitted = out.graph.out_neighbors[static_cast<std::size_t>(rec.drawn)];
  rec.transmitted_cost = out.graph.out_costs[static_cast<std::size_t>(rec.drawn)];
  rec.dominating_set_size = static_cast<int>(out.graph.dominating_set.size());
  if (ctx.alpha_diagnostic && model_count <= 25) {
    rec.independence = independence_number(out.graph);
  }

  int n_clients = 0;
  try {
    n_clients = client_count(ctx.bandwidth_total, ctx.bandwidth_loss,
                             static_cast<int>(rec.transmitted.size()),
                             ctx.n_max);
  } catch (const BandwidthError& e) {
    throw BandwidthError("round " + std::to_string(t) + ": " + e.what());
  }
  rec.clients = select_clients(std::min(n_clients, stream.clients),
                               stream.clients, client_rng);

  const auto mix = ensemble_weights(state.w, rec.transmitted);
  // Per-node ensemble mixes, needed for the exact expected loss.
  std::vector<std::vector<double>> node_mixes;
  if (ctx.oracle) {
    node_mixes.reserve(model_count);
    for (ModelId k = 0; k < model_count; ++k) {
      node_mixes.push_back(ensemble_weights(
          state.w, out.graph.out_neighbors[static_cast<std::size_t>(k)]));
    }
    out.oracle_losses.assign(model_count, 0.0);
  }

  rec.member_summed_losses.assign(model_count, 0.0);
  std::vector<double> node_losses(ctx.oracle ? model_count : 0, 0.0);
  std::vector<double> preds(model_count, 0.0);
  double realized_sum_unclipped = 0.0;
  double jensen_margin = -std::numeric_limits<double>::infinity();

  for (int client : rec.clients) {
    const DataSample& sample = stream.sample(t, client);
    if (ctx.oracle) {
      for (ModelId k = 0; k < model_count; ++k) {
        preds[static_cast<std::size_t>(k)] =
            catalog.models[static_cast<std::size_t>(k)].predict(sample.features);
      }
    } else {
      for (ModelId k : rec.transmitted) {
        preds[static_cast<std::size_t>(k)] =
            catalog.models[static_cast<std::size_t>(k)].predict(sample.features);
      }
    }

    double prediction = 0.0;
    double member_mean_unclipped = 0.0;
    for (std::size_t i = 0; i < rec.transmitted.size(); ++i) {
      const double p = preds[static_cast<std::size_t>(rec.transmitted[i])];
      prediction += mix[i] * p;
      member_mean_unclipped += mix[i] * squared_error(p, sample.target);
      rec.member_summed_losses[static_cast<std::size_t>(rec.transmitted[i])] +=
          clipped_squared_loss(p, sample.target);
    }
    rec.client_predictions.push_back(prediction);
    const double unclipped = squared_error(prediction, sample.target);
    const double margin = unclipped - member_mean_unclipped;
    jensen_margin = std::max(jensen_margin, margin);
    if (margin > kJensenSlack * (1.0 + member_mean_unclipped)) {
      throw NumericError("round " + std::to_string(t) +
                         ": ensemble loss exceeded the member mean by " +
                         format_real(margin));
    }
    realized_sum_unclipped += unclipped;
    rec.realized_loss_sum_clipped += std::min(unclipped, 1.0);

    if (ctx.oracle) {
      for (ModelId k = 0; k < model_count; ++k) {
        out.oracle_losses[static_cast<std::size_t>(k)] += clipped_squared_loss(
            preds[static_cast<std::size_t>(k)], sample.target);
        const auto& neighborhood =
            out.graph.out_neighbors[static_cast<std::size_t>(k)];
        double node_pred = 0.0;
        for (std::size_t i = 0; i < neighborhood.size(); ++i) {
          node_pred +=
              node_mixes[static_cast<std::size_t>(k)][i] *
              preds[static_cast<std::size_t>(neighborhood[i])];
        }
        node_losses[static_cast<std::size_t>(k)] +=
            clipped_squared_loss(node_pred, sample.target);
      }
    }
  }

  rec.realized_loss_mean =
      realized_sum_unclipped / static_cast<double>(rec.clients.size());
  rec.jensen_margin = jensen_margin;
  if (ctx.oracle) {
    rec.expected_ensemble_loss = expected_round_loss(rec.pmf, node_losses);
  }

  rec.observation_probs.resize(model_count);
  rec.loss_estimates.resize(model_count);
  rec.ensemble_loss_estimates.resize(model_count);
  std::vector<char> in_transmitted(model_count, 0);
  for (ModelId k : rec.transmitted) in_transmitted[static_cast<std::size_t>(k)] = 1;
  for (ModelId k = 0; k < model_count; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    rec.observation_probs[ks] = observation_probability(out.graph, rec.pmf, k);
    rec.loss_estimates[ks] = estimate_model_loss(
        rec.member_summed_losses[ks], rec.observation_probs[ks],
        in_transmitted[ks] != 0);
    rec.ensemble_loss_estimates[ks] = estimate_ensemble_loss(
        rec.realized_loss_sum_clipped, rec.pmf[ks], k == rec.drawn);
  }

  out.state = update_weights(state, rec.loss_estimates,
                             rec.ensemble_loss_estimates);
  return out;
}

ExperimentSetup prepare_experiment(const ExperimentConfig& config,
                                   std::uint64_t seed) {
  Dataset raw;
  if (config.dataset.kind == DatasetConfig::Kind::kSynthetic) {
    raw = synthetic_dataset(config.dataset.synthetic, seed);
  } else if (!config.dataset.target_column.empty()) {
    raw = load_dataset(config.dataset.csv_path, config.dataset.target_column);
  } else {
    raw = load_dataset(config.dataset.csv_path, config.dataset.target_index);
  }
  const Dataset normalized = normalize_minmax(raw);

  SplitPlan plan;
  plan.pretrain_fraction = config.pretrain_fraction;
  plan.seed = seed;
  plan.rounds = config.rounds;
  plan.clients = config.clients;
  auto [pretrain, stream] = partition(normalized, plan);

  ExperimentSetup setup;
  if (config.zoo.load_dump) {
    setup.catalog = load_catalog(*config.zoo.load_dump);
    if (!setup.catalog.models.empty() &&
        setup.catalog.models.front().feature_count != normalized.feature_count) {
      throw ConfigError("catalog dump was trained on " +
                        std::to_string(setup.catalog.models.front().feature_count) +
                        " features, dataset has " +
                        std::to_string(normalized.feature_count));
    }
  } else {
    setup.catalog = build_catalog(config.zoo.resolve(), pretrain, seed);
  }
  const Budget budget{config.budget};
  if (!budget.covers(setup.catalog.max_cost())) {
    throw ConfigError("budget " + format_real(budget.per_round) +
                      " is below the largest model cost " +
                      format_real(setup.catalog.max_cost()));
  }
  setup.stream = std::move(stream);
  setup.dataset_name = normalized.name;
  setup.config_json = config_to_json(config).dump();
  return setup;
}

ExperimentTrace run_experiment_with_setup(const ExperimentConfig& config,
                                          Algorithm algo, std::uint64_t seed,
                                          const ExperimentSetup& setup) {
  if (algo != Algorithm::kEflFg) {
    return run_baseline_loop(config, algo, seed, setup);
  }
  const int model_count = setup.catalog.size();

  ExperimentTrace trace;
  trace.algorithm = algorithm_name(algo);
  trace.dataset_name = setup.dataset_name;
  trace.seed = seed;
  trace.config_json = setup.config_json;
  trace.budget = config.budget;
  trace.rounds_planned = config.rounds;
  trace.model_count = model_count;

  RoundContext ctx;
  ctx.catalog = &setup.catalog;
  ctx.stream = &setup.stream;
  ctx.budget = config.budget;
  ctx.bandwidth_total = config.bandwidth_total;
  ctx.bandwidth_loss = config.bandwidth_loss;
  ctx.n_max = config.n_max;
  ctx.oracle = config.oracle;
  ctx.alpha_diagnostic = config.alpha_diagnostic;

  ServerState state = ServerState::init(
      model_count, config.resolve_eta(model_count),
      config.resolve_xi(model_count));
  auto node_rng = substream(seed, "node-draw");
  auto client_rng = substream(seed, "client-selection");

  FeedbackGraph prev;
  double running_loss_mean = 0.0;
  std::ostringstream graph_dump_out;
  for (int t = 1; t <= config.rounds; ++t) {
    RoundOutput out = run_round(state, t > 1 ? &prev : nullptr, t, ctx,
                                node_rng, client_rng);
    if (config.graph_dump) {
      graph_dump_out << "t=" << t << '\n' << dump_graph(out.graph);
    }
    running_loss_mean += out.record.realized_loss_mean;
    trace.mse_series.push_back(running_loss_mean / t);
    if (config.oracle) {
      trace.oracle_member_losses.push_back(std::move(out.oracle_losses));
    }
    trace.records.push_back(std::move(out.record));
    state = std::move(out.state);
    prev = std::move(out.graph);
  }
  trace.graph_dump_text = graph_dump_out.str();
  return trace;
}

ExperimentTrace run_experiment(const ExperimentConfig& config, Algorithm algo,
                               std::uint64_t seed) {
  return run_experiment_with_setup(config, algo, seed,
                                   prepare_experiment(config, seed));
}

double mse_at(const ExperimentTrace& trace, int t) {
  if (t < 1 || t > static_cast<int>(trace.records.size())) {
    throw std::invalid_argument("mse_at: round out of range");
  }
  double sum = 0.0;
  for (int tau = 0; tau < t; ++tau) {
    sum += trace.records[static_cast<std::size_t>(tau)].realized_loss_mean;
  }
  return sum / static_cast<double>(t);
}

RegretSeries cumulative_regret(const ExperimentTrace& trace) {
  if (!trace.has_oracle() && !trace.records.empty()) {
    throw DiagnosticUnavailable(
        "cumulative_regret: trace has no oracle channel");
  }
  RegretSeries series;
  const int model_count = trace.model_count;
  std::vector<double> cumulative(model_count, 0.0);
  double expected_sum = 0.0;
  for (std::size_t t = 0; t < trace.records.size(); ++t) {
    if (!trace.records[t].expected_ensemble_loss) {
      throw DiagnosticUnavailable(
          "cumulative_regret: round " + std::to_string(t + 1) +
          " lacks the expected ensemble loss");
    }
    expected_sum += *trace.records[t].expected_ensemble_loss;
    for (int k = 0; k < model_count; ++k) {
      cumulative[static_cast<std::size_t>(k)] +=
          trace.oracle_member_losses[t][static_cast<std::size_t>(k)];
    }
    const auto best =
        std::min_element(cumulative.begin(), cumulative.end());
    series.regret.push_back(expected_sum - *best);
    series.best_model =
        static_cast<ModelId>(std::distance(cumulative.begin(), best));
  }
  return series;
}

double budget_violation_rate(const ExperimentTrace& trace, double budget) {
  if (trace.records.empty()) return 0.0;
  std::size_t violations = 0;
  for (const auto& rec : trace.records) {
    if (rec.transmitted_cost > budget) ++violations;
  }
  return static_cast<double>(violations) /
         static_cast<double>(trace.records.size());
}

void write_trace_csv(std::ostream& out, const ExperimentTrace& trace,
                     bool per_model_estimates) {
  out << "t,I_t,S_t,cost,n_clients,realized_ensemble_loss_mean,"
         "expected_ensemble_loss,mse_t,dom_set_size,alpha,algorithm";
  if (per_model_estimates) {
    for (int k = 0; k < trace.model_count; ++k) out << ",l_est_" << k;
    for (int k = 0; k < trace.model_count; ++k) out << ",lhat_est_" << k;
  }
  out << '\n';
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const RoundRecord& rec = trace.records[i];
    out << rec.t << ',';
    if (rec.drawn >= 0) out << rec.drawn;
    out << ',';
    for (std::size_t j = 0; j < rec.transmitted.size(); ++j) {
      if (j) out << ';';
      out << rec.transmitted[j];
    }
    out << ',' << format_real(rec.transmitted_cost) << ','
        << rec.clients.size() << ',' << format_real(rec.realized_loss_mean)
        << ',';
    if (rec.expected_ensemble_loss) {
      out << format_real(*rec.expected_ensemble_loss);
    }
    out << ',' << format_real(trace.mse_series[i]) << ',';
    if (rec.dominating_set_size >= 0) out << rec.dominating_set_size;
    out << ',';
    if (rec.independence) out << *rec.independence;
    out << ',' << trace.algorithm;
    if (per_model_estimates) {
      for (int k = 0; k < trace.model_count; ++k) {
        out << ',' << format_real(rec.loss_estimates[static_cast<std::size_t>(k)]);
      }
      for (int k = 0; k < trace.model_count; ++k) {
        out << ','
            << format_real(
                   rec.ensemble_loss_estimates[static_cast<std::size_t>(k)]);
      }
    }
    out << '\n';
  }
}

std::string trace_to_csv(const ExperimentTrace& trace,
                         bool per_model_estimates) {
  std::ostringstream out;
  write_trace_csv(out, trace, per_model_estimates);
  return out.str();
}

}  // namespace eflfg
