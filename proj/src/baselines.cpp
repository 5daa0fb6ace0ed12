#include "eflfg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eflfg/rng.hpp"

namespace eflfg {

namespace {

constexpr double kWeightFloor = 1e-300;

double weight_sum(std::span<const double> w) {
  double s = 0.0;
  for (double x : w) s += x;
  return s;
}

// Shared client-side evaluation: ensemble prediction over `transmitted` with
// the given mix, loss accounting, optional oracle channel.
void evaluate_clients(const RoundContext& ctx, int t, RoundRecord& rec,
                      const std::vector<double>& mix,
                      std::vector<double>* oracle_losses) {
  const ModelCatalog& catalog = *ctx.catalog;
  const int model_count = catalog.size();
  rec.member_summed_losses.assign(model_count, 0.0);
  std::vector<double> preds(model_count, 0.0);
  double realized_sum_unclipped = 0.0;
  double jensen_margin = -std::numeric_limits<double>::infinity();

  for (int client : rec.clients) {
    const DataSample& sample = ctx.stream->sample(t, client);
    if (oracle_losses) {
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
    if (rec.transmitted.empty()) {
      prediction = 0.5;  // nothing transmitted: constant midpoint predictor
    } else {
      for (std::size_t i = 0; i < rec.transmitted.size(); ++i) {
        const double p = preds[static_cast<std::size_t>(rec.transmitted[i])];
        prediction += mix[i] * p;
        member_mean_unclipped += mix[i] * squared_error(p, sample.target);
        rec.member_summed_losses[static_cast<std::size_t>(rec.transmitted[i])] +=
            clipped_squared_loss(p, sample.target);
      }
    }
    rec.client_predictions.push_back(prediction);
    const double unclipped = squared_error(prediction, sample.target);
    if (!rec.transmitted.empty()) {
      jensen_margin =
          std::max(jensen_margin, unclipped - member_mean_unclipped);
    }
    realized_sum_unclipped += unclipped;
    rec.realized_loss_sum_clipped += std::min(unclipped, 1.0);

    if (oracle_losses) {
      for (ModelId k = 0; k < model_count; ++k) {
        (*oracle_losses)[static_cast<std::size_t>(k)] += clipped_squared_loss(
            preds[static_cast<std::size_t>(k)], sample.target);
      }
    }
  }
  rec.realized_loss_mean =
      realized_sum_unclipped / static_cast<double>(rec.clients.size());
  rec.jensen_margin = rec.transmitted.empty() ? 0.0 : jensen_margin;
}

}  // namespace

BaselineState BaselineState::init(int model_count, double eta) {
  if (model_count < 1) {
    throw std::invalid_argument("BaselineState: need at least one model");
  }
  BaselineState s;
  s.mix_weights.assign(model_count, 1.0);
  s.eta = eta;
  s.round = 1;
  return s;
}

std::vector<double> fedboost_inclusion(std::span<const double> mix_weights,
                                       std::span<const double> costs,
                                       double budget) {
  const std::size_t model_count = mix_weights.size();
  if (costs.size() != model_count || model_count == 0) {
    throw std::invalid_argument("fedboost_inclusion: size mismatch");
  }
  double total_cost = 0.0;
  for (double c : costs) total_cost += c;
  if (total_cost <= budget) {
    return std::vector<double>(model_count, 1.0);
  }

  const double total_weight = weight_sum(mix_weights);
  if (!(total_weight > 0.0) || !std::isfinite(total_weight)) {
    throw NumericError("fedboost_inclusion: weight sum must be positive");
  }
  std::vector<double> relative(model_count);
  for (std::size_t k = 0; k < model_count; ++k) {
    relative[k] = mix_weights[k] / total_weight;
  }
  auto expected_cost = [&](double gamma) {
    double e = 0.0;
    for (std::size_t k = 0; k < model_count; ++k) {
      e += std::min(1.0, gamma * relative[k]) * costs[k];
    }
    return e;
  };

  double hi = 1.0;
  while (expected_cost(hi) < budget) {
    hi *= 2.0;
    if (hi > 1e300) {
      throw NumericError("fedboost_inclusion: no gamma reaches the budget");
    }
  }
  double lo = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expected_cost(mid) < budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  std::vector<double> inclusion(model_count);
  for (std::size_t k = 0; k < model_count; ++k) {
    inclusion[k] = std::min(1.0, hi * relative[k]);
  }
  const double achieved = expected_cost(hi);
  if (std::abs(achieved - budget) > 1e-6 * std::max(1.0, budget)) {
    throw NumericError("fedboost_inclusion: bisection did not converge (got " +
                       std::to_string(achieved) + ")");
  }
  return inclusion;
}

BaselineRoundOutput full_ensemble_round(const BaselineState& state, int t,
                                        const RoundContext& ctx,
                                        std::mt19937_64& client_rng) {
  const ModelCatalog& catalog = *ctx.catalog;
  const int model_count = catalog.size();

  BaselineRoundOutput out;
  RoundRecord& rec = out.record;
  rec.t = t;
  rec.transmitted.resize(model_count);
  for (ModelId k = 0; k < model_count; ++k) rec.transmitted[static_cast<std::size_t>(k)] = k;
  rec.transmitted_cost = catalog.total_cost();

  const int n_clients =
      client_count(ctx.bandwidth_total, ctx.bandwidth_loss, model_count,
                   ctx.n_max);
  rec.clients = select_clients(std::min(n_clients, ctx.stream->clients),
                               ctx.stream->clients, client_rng);

  const auto mix = ensemble_weights(state.mix_weights, rec.transmitted);
  if (ctx.oracle) out.oracle_losses.assign(model_count, 0.0);
  evaluate_clients(ctx, t, rec, mix,
                   ctx.oracle ? &out.oracle_losses : nullptr);
  // Everything is observed: estimates are the plain summed losses, and the
  // ensemble is deterministic so its conditional expectation is realized.
  rec.loss_estimates = rec.member_summed_losses;
  rec.ensemble_loss_estimates.assign(model_count, 0.0);
  if (ctx.oracle) rec.expected_ensemble_loss = rec.realized_loss_sum_clipped;

  out.state = state;
  for (ModelId k = 0; k < model_count; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    out.state.mix_weights[ks] =
        std::max(out.state.mix_weights[ks] *
                     std::exp(-state.eta * rec.member_summed_losses[ks]),
                 kWeightFloor);
  }
  ++out.state.round;
  return out;
}

BaselineRoundOutput fedboost_round(const BaselineState& state, int t,
                                   const RoundContext& ctx,
                                   std::mt19937_64& sample_rng,
                                   std::mt19937_64& client_rng) {
  const ModelCatalog& catalog = *ctx.catalog;
  const int model_count = catalog.size();

  BaselineRoundOutput out;
  out.state = state;
  out.state.inclusion =
      fedboost_inclusion(state.mix_weights, catalog.costs, ctx.budget);

  RoundRecord& rec = out.record;
  rec.t = t;
  for (ModelId k = 0; k < model_count; ++k) {
    // One uniform per model per round keeps the stream alignment fixed.
    const double coin = uniform01(sample_rng);
    if (coin < out.state.inclusion[static_cast<std::size_t>(k)]) {
      rec.transmitted.push_back(k);
      rec.transmitted_cost += catalog.costs[static_cast<std::size_t>(k)];
    }
  }

  const int degree = static_cast<int>(rec.transmitted.size());
  const int n_clients = client_count(ctx.bandwidth_total, ctx.bandwidth_loss,
                                     degree, ctx.n_max);
  rec.clients = select_clients(std::min(n_clients, ctx.stream->clients),
                               ctx.stream->clients, client_rng);

  std::vector<double> mix;
  if (!rec.transmitted.empty()) {
    mix = ensemble_weights(state.mix_weights, rec.transmitted);
  }
  if (ctx.oracle) out.oracle_losses.assign(model_count, 0.0);
  evaluate_clients(ctx, t, rec, mix,
                   ctx.oracle ? &out.oracle_losses : nullptr);

  rec.loss_estimates.assign(model_count, 0.0);
  rec.ensemble_loss_estimates.assign(model_count, 0.0);
  if (!rec.transmitted.empty()) {
    // Inverse-propensity correction, then the usual multiplicative update.
    for (ModelId k : rec.transmitted) {
      const auto ks = static_cast<std::size_t>(k);
      rec.loss_estimates[ks] =
          rec.member_summed_losses[ks] / out.state.inclusion[ks];
    }
    for (ModelId k = 0; k < model_count; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      out.state.mix_weights[ks] =
          std::max(out.state.mix_weights[ks] *
                       std::exp(-state.eta * rec.loss_estimates[ks]),
                   kWeightFloor);
    }
  }
  ++out.state.round;
  return out;
}

std::pair<ModelId, std::vector<double>> best_fixed_model(
    const std::vector<std::vector<double>>& oracle_losses) {
  if (oracle_losses.empty()) {
    throw DiagnosticUnavailable("best_fixed_model: oracle channel is empty");
  }
  const std::size_t model_count = oracle_losses.front().size();
  std::vector<double> cumulative(model_count, 0.0);
  for (const auto& round : oracle_losses) {
    for (std::size_t k = 0; k < model_count; ++k) cumulative[k] += round[k];
  }
  const auto best = std::min_element(cumulative.begin(), cumulative.end());
  const ModelId winner =
      static_cast<ModelId>(std::distance(cumulative.begin(), best));
  std::vector<double> series;
  series.reserve(oracle_losses.size());
  double sum = 0.0;
  for (const auto& round : oracle_losses) {
    sum += round[static_cast<std::size_t>(winner)];
    series.push_back(sum);
  }
  return {winner, std::move(series)};
}

ExperimentTrace run_baseline_loop(const ExperimentConfig& config,
                                  Algorithm algo, std::uint64_t seed,
                                  const ExperimentSetup& setup) {
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

  BaselineState state =
      BaselineState::init(model_count, config.resolve_eta(model_count));
  auto client_rng = substream(seed, "client-selection");
  auto sample_rng = substream(seed, "fedboost-sampling");

  double running_loss_mean = 0.0;
  for (int t = 1; t <= config.rounds; ++t) {
    BaselineRoundOutput out =
        algo == Algorithm::kFullEnsemble
            ? full_ensemble_round(state, t, ctx, client_rng)
            : fedboost_round(state, t, ctx, sample_rng, client_rng);
    running_loss_mean += out.record.realized_loss_mean;
    trace.mse_series.push_back(running_loss_mean / t);
    if (config.oracle) {
      trace.oracle_member_losses.push_back(std::move(out.oracle_losses));
    }
    trace.records.push_back(std::move(out.record));
    state = std::move(out.state);
  }
  return trace;
}

}  // namespace eflfg
