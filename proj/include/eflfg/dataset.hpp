#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "eflfg/types.hpp"

namespace eflfg {

struct Dataset {
  std::string name;
  std::vector<DataSample> samples;
  int feature_count = 0;
};

// How a dataset is split into a pretraining set and a T-round client stream.
struct SplitPlan {
  double pretrain_fraction = 0.1;
  std::uint64_t seed = 0;
  int rounds = 0;   // T
  int clients = 1;  // N
};

struct PretrainSet {
  std::vector<DataSample> samples;
  int feature_count = 0;
};

// Stream samples are dealt round-robin over (round, client) slots and wrap
// around deterministically when they run out.
struct ClientStream {
  std::vector<DataSample> samples;
  int clients = 1;
  int feature_count = 0;

  // round is 1-based, client in [0, clients).
  const DataSample& sample(int round, int client) const;
};

struct SyntheticSpec {
  enum class Family { kLinear, kSine };
  std::string name = "synthetic";
  int feature_count = 1;
  int sample_count = 0;
  double noise = 0.0;  // sigma of additive gaussian noise on the raw target
  Family family = Family::kLinear;
  double slope = 1.0;
};

// CSV with a header row; every cell after the header must be numeric.
// Values are returned raw (unnormalized), row order preserved.
Dataset load_dataset(const std::filesystem::path& path, int target_index);
Dataset load_dataset(const std::filesystem::path& path,
                     const std::string& target_column);

// Affine per-column map of features and target onto [0,1] using whole-dataset
// min/max. Constant columns map to 0.5. Idempotent.
Dataset normalize_minmax(const Dataset& dataset);

// Seeded uniform pretrain subset; remaining samples (in dataset order) become
// the client stream.
std::pair<PretrainSet, ClientStream> partition(const Dataset& dataset,
                                               const SplitPlan& plan);

// Deterministic generator: features ~ U[0,1]^d, raw target is
//   linear:  slope * mean(x) + noise * N(0,1)
//   sine:    sin(2*pi * slope * mean(x)) + noise * N(0,1)
Dataset synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace eflfg
