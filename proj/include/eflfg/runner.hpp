#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eflfg/config.hpp"

namespace eflfg {

struct RunSummaryRow {
  std::string algorithm;
  std::string dataset;
  std::uint64_t seed = 0;
  int rounds = 0;
  double final_mse = 0.0;
  double violation_rate = 0.0;
  std::optional<double> regret_total;
  double wall_clock_s = 0.0;
};

// Executes every (algorithm, seed) combination, writing one trace CSV each
// plus a summary.csv. Traces stream to "<name>.csv.partial" and are renamed
// on completion, so a failed run leaves its partial file behind. Nothing is
// written before validation succeeds. Returns a process exit code
// (0 ok, 2 config error, 3 runtime error).
int run_all(const ExperimentConfig& config,
            const std::optional<std::filesystem::path>& out_override,
            std::optional<std::uint64_t> seed_override, bool quiet,
            std::ostream& log);

std::string summary_to_csv(const std::vector<RunSummaryRow>& rows);

}  // namespace eflfg
