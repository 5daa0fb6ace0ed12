#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace eflfg {

// Dense model index in [0, K). -1 is used as "not applicable" in records.
using ModelId = int;

// One normalized observation: every feature coordinate and the target lie in
// [0,1] after ingestion.
struct DataSample {
  std::vector<double> features;
  double target = 0.0;
};

// Per-round transmission budget. Must satisfy per_round >= max_k cost_k.
struct Budget {
  double per_round = 0.0;

  bool covers(double cost) const { return cost <= per_round; }
};

// Error taxonomy. Config/parse problems map to CLI exit code 2, the rest to 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BandwidthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DiagnosticUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Squared error clipped at 1 so that losses stay in [0,1] for any real
// prediction against a normalized target. Throws on non-finite input.
double clipped_squared_loss(double prediction, double target);

// Plain squared error, used for MSE reporting.
double squared_error(double prediction, double target);

}  // namespace eflfg
