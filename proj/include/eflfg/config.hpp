#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eflfg/dataset.hpp"
#include "eflfg/model_zoo.hpp"

#include <nlohmann/json_fwd.hpp>

namespace eflfg {

enum class Algorithm { kEflFg, kFedboostSurrogate, kFullEnsemble };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// Learning / exploration rate: an explicit value, 1/sqrt(T), or the
// theorem-style schedule (eta = sqrt(ln K / T), xi = (ln K)^(3/4) T^(-1/4)).
struct RateSpec {
  enum class Kind { kExplicit, kOneOverSqrtT, kTheorem1 };
  Kind kind = Kind::kOneOverSqrtT;
  double value = 0.0;  // kExplicit only
};

struct DatasetConfig {
  enum class Kind { kCsv, kSynthetic };
  Kind kind = Kind::kSynthetic;
  // csv
  std::filesystem::path csv_path;
  std::string target_column;  // empty means use target_index
  int target_index = -1;
  // synthetic
  SyntheticSpec synthetic;

  std::string display_name() const;
};

struct ZooSettings {
  bool use_default = true;        // the 22-model preset
  std::vector<ModelSpec> specs;   // custom list when use_default is false
  double ridge = 1e-3;
  int anchor_cap = 2000;
  int hidden_width = 25;
  int mlp_epochs = 500;
  double mlp_step = 0.05;
  std::optional<std::filesystem::path> load_dump;  // reuse a trained catalog

  ZooConfig resolve() const;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ZooSettings zoo;
  double budget = 3.0;
  int rounds = 2000;  // T
  int clients = 100;  // N
  int n_max = 10;     // cap on clients contacted per round
  double bandwidth_total = 1000.0;  // b_t
  double bandwidth_loss = 1.0;      // b_loss, per transmitted loss value
  RateSpec eta;
  RateSpec xi;
  std::vector<Algorithm> algorithms{Algorithm::kEflFg};
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "out";
  double pretrain_fraction = 0.1;
  bool oracle = false;            // record the full-information regret channel
  bool graph_dump = false;
  bool alpha_diagnostic = false;  // independence number per round (K <= 25)
  bool per_model_estimates = false;  // extra trace columns

  double resolve_eta(int model_count) const;
  double resolve_xi(int model_count) const;
};

// Strict JSON parsing: unknown keys, type mismatches, and constraint
// violations all raise ConfigError naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig parse_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

// Checks that need dataset/zoo shape: budget covers every planned model cost,
// stream sizing, client caps. Throws ConfigError.
void validate_config(const ExperimentConfig& config);

}  // namespace eflfg
