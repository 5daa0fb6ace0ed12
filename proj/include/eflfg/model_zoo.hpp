#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eflfg/dataset.hpp"
#include "eflfg/types.hpp"

#include <nlohmann/json_fwd.hpp>

namespace eflfg {

enum class ModelFamily {
  kGaussianKernel,
  kLaplacianKernel,
  kPolynomialKernel,
  kSigmoidKernel,
  kMlp,
};

std::string family_name(ModelFamily family);
ModelFamily family_from_name(const std::string& name);

struct ModelSpec {
  ModelFamily family = ModelFamily::kGaussianKernel;
  // Bandwidth for gaussian/laplacian, slope for sigmoid, degree for
  // polynomial. Ignored for mlp.
  double kernel_param = 1.0;
  double ridge = 1e-3;
  int anchor_cap = 2000;
  // mlp only.
  std::vector<int> hidden_layers;
  int epochs = 500;
  double step_size = 0.05;
};

// A fixed predictor. Kernel models keep anchors plus dual coefficients; mlps
// keep dense layer weights. Immutable after training; predict is pure.
struct PretrainedModel {
  ModelId id = 0;
  ModelSpec spec;
  int feature_count = 0;
  long param_count = 0;

  // kernel families
  std::vector<std::vector<double>> anchors;
  std::vector<double> dual_coeffs;

  // mlp: layer_sizes = [d, hidden..., 1]; weights row-major (out x in).
  std::vector<int> layer_sizes;
  std::vector<std::vector<double>> layer_weights;
  std::vector<std::vector<double>> layer_biases;

  double predict(std::span<const double> x) const;
};

struct ModelCatalog {
  std::vector<PretrainedModel> models;
  std::vector<double> costs;  // in (0,1], max is exactly 1

  int size() const { return static_cast<int>(models.size()); }
  double max_cost() const;
  double total_cost() const;
};

struct ZooConfig {
  std::vector<ModelSpec> specs;
};

// The 22-predictor default: gaussian, laplacian, sigmoid at
// {0.01, 0.1, 1, 10, 100}, polynomial at degrees 1..5, and mlps with one and
// two hidden layers of `hidden_width` ReLU units.
ZooConfig default_zoo(double ridge = 1e-3, int anchor_cap = 2000,
                      int hidden_width = 25, int mlp_epochs = 500,
                      double mlp_step = 0.05);

PretrainedModel train_model(const ModelSpec& spec, const PretrainSet& pretrain,
                            std::uint64_t seed);

// Normalized transmission cost: param_count / max_params.
double model_cost(const PretrainedModel& model, long max_params);

// Anchor count used when a kernel spec is trained on `pretrain_size` samples.
long planned_anchor_count(const ModelSpec& spec, long pretrain_size);
// Parameter count without training (kernel: anchors + 1; mlp: weights+biases).
long planned_param_count(const ModelSpec& spec, int feature_count,
                         long pretrain_size);

ModelCatalog build_catalog(const ZooConfig& zoo, const PretrainSet& pretrain,
                           std::uint64_t master_seed);

// Self-describing coefficient dump, exact double round-trip.
nlohmann::json catalog_to_json(const ModelCatalog& catalog);
ModelCatalog catalog_from_json(const nlohmann::json& j);
void save_catalog(const ModelCatalog& catalog, const std::filesystem::path& p);
ModelCatalog load_catalog(const std::filesystem::path& p);

}  // namespace eflfg
