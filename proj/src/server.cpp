#include "eflfg/server.hpp"

#include <algorithm>
#include <cmath>

#include "eflfg/rng.hpp"

namespace eflfg {

namespace {

constexpr double kWeightFloor = 1e-300;
constexpr double kRescaleThreshold = 1e-100;

void rescale_if_tiny(std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (top >= kRescaleThreshold) return;
  for (double& x : v) x = std::max(x / top, kWeightFloor);
}

}  // namespace

ServerState ServerState::init(int model_count, double eta, double xi) {
  if (model_count < 1) {
    throw std::invalid_argument("ServerState: need at least one model");
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("ServerState: eta must be positive and finite");
  }
  if (!(xi >= 0.0 && xi < 1.0)) {
    throw ConfigError("ServerState: xi must be in [0,1)");
  }
  ServerState s;
  s.w.assign(model_count, 1.0);
  s.u.assign(model_count, 1.0);
  s.eta = eta;
  s.xi = xi;
  s.round = 1;
  return s;
}

std::vector<double> compute_pmf(const ServerState& state,
                                const std::vector<ModelId>& dominating) {
  if (dominating.empty()) {
    throw std::invalid_argument("compute_pmf: empty dominating set");
  }
  double total = 0.0;
  for (double u : state.u) total += u;
  if (!std::isfinite(total) || total <= 0.0) {
    throw NumericError("compute_pmf: node-weight sum is not a positive finite value");
  }
  std::vector<double> pmf(state.u.size());
  for (std::size_t k = 0; k < state.u.size(); ++k) {
    pmf[k] = (1.0 - state.xi) * state.u[k] / total;
  }
  const double exploration = state.xi / static_cast<double>(dominating.size());
  for (ModelId d : dominating) pmf[static_cast<std::size_t>(d)] += exploration;
  return pmf;
}

ModelId draw_node(std::span<const double> pmf, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    acc += pmf[k];
    if (u < acc) return static_cast<ModelId>(k);
  }
  return static_cast<ModelId>(pmf.size() - 1);
}

double observation_probability(const FeedbackGraph& graph,
                               std::span<const double> pmf, ModelId k) {
  double q = 0.0;
  for (ModelId j : graph.in_neighbors[static_cast<std::size_t>(k)]) {
    q += pmf[static_cast<std::size_t>(j)];
  }
  return q;
}

std::vector<double> ensemble_weights(std::span<const double> w,
                                     const std::vector<ModelId>& transmitted) {
  if (transmitted.empty()) {
    throw std::invalid_argument("ensemble_weights: empty transmitted set");
  }
  double total = 0.0;
  for (ModelId k : transmitted) total += w[static_cast<std::size_t>(k)];
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("ensemble_weights: weight sum must be positive");
  }
  std::vector<double> out(transmitted.size());
  for (std::size_t i = 0; i < transmitted.size(); ++i) {
    out[i] = w[static_cast<std::size_t>(transmitted[i])] / total;
  }
  return out;
}

double ensemble_predict(const ServerState& state,
                        const std::vector<ModelId>& transmitted,
                        const ModelCatalog& catalog,
                        std::span<const double> x) {
  const auto weights = ensemble_weights(state.w, transmitted);
  double pred = 0.0;
  for (std::size_t i = 0; i < transmitted.size(); ++i) {
    pred += weights[i] *
            catalog.models[static_cast<std::size_t>(transmitted[i])].predict(x);
  }
  return pred;
}

double estimate_model_loss(double summed_loss, double q_k,
                           bool in_transmitted) {
  if (!in_transmitted) return 0.0;
  if (!(q_k > 0.0) || !std::isfinite(q_k)) {
    throw NumericError("estimate_model_loss: observation probability must be positive");
  }
  return summed_loss / q_k;
}

double estimate_ensemble_loss(double summed_loss, double p_k, bool is_drawn) {
  if (!is_drawn) return 0.0;
  if (!(p_k > 0.0) || !std::isfinite(p_k)) {
    throw NumericError("estimate_ensemble_loss: draw probability must be positive");
  }
  return summed_loss / p_k;
}

ServerState update_weights(ServerState state, std::span<const double> losses,
                           std::span<const double> ensemble_losses) {
  if (losses.size() != state.w.size() ||
      ensemble_losses.size() != state.u.size()) {
    throw std::invalid_argument("update_weights: estimate size mismatch");
  }
  for (std::size_t k = 0; k < state.w.size(); ++k) {
    if (!std::isfinite(losses[k]) || losses[k] < 0.0 ||
        !std::isfinite(ensemble_losses[k]) || ensemble_losses[k] < 0.0) {
      throw NumericError("update_weights: estimates must be finite and >= 0");
    }
    state.w[k] =
        std::max(state.w[k] * std::exp(-state.eta * losses[k]), kWeightFloor);
    state.u[k] = std::max(
        state.u[k] * std::exp(-state.eta * ensemble_losses[k]), kWeightFloor);
    if (!std::isfinite(state.w[k]) || !std::isfinite(state.u[k])) {
      throw NumericError("update_weights: weight became non-finite");
    }
  }
  rescale_if_tiny(state.w);
  rescale_if_tiny(state.u);
  ++state.round;
  return state;
}

double expected_round_loss(std::span<const double> pmf,
                           std::span<const double> per_node_losses) {
  if (pmf.size() != per_node_losses.size()) {
    throw std::invalid_argument("expected_round_loss: size mismatch");
  }
  double e = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    e += pmf[k] * per_node_losses[k];
  }
  return e;
}

}  // namespace eflfg
