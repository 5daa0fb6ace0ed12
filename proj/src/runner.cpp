#include "eflfg/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "eflfg/simulation.hpp"

namespace eflfg {

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string trace_filename(Algorithm algo, std::uint64_t seed) {
  return "trace_" + algorithm_name(algo) + "_seed" + std::to_string(seed) +
         ".csv";
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace

std::string summary_to_csv(const std::vector<RunSummaryRow>& rows) {
  std::string out =
      "algorithm,dataset,seed,rounds,final_mse,violation_rate,regret_T,"
      "wall_clock_s\n";
  for (const auto& r : rows) {
    out += r.algorithm + ',' + r.dataset + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.rounds) + ',' + format_real(r.final_mse) + ',' +
           format_real(r.violation_rate) + ',';
    if (r.regret_total) out += format_real(*r.regret_total);
    out += ',' + format_real(r.wall_clock_s) + '\n';
  }
  return out;
}

int run_all(const ExperimentConfig& config,
            const std::optional<std::filesystem::path>& out_override,
            std::optional<std::uint64_t> seed_override, bool quiet,
            std::ostream& log) {
  ExperimentConfig cfg = config;
  if (out_override) cfg.output_dir = *out_override;
  if (seed_override) cfg.seeds = {*seed_override};

  try {
    validate_config(cfg);
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  }

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) {
    log << "config error: cannot create output directory '"
        << cfg.output_dir.string() << "': " << ec.message() << '\n';
    return 2;
  }

  std::vector<RunSummaryRow> rows;
  bool any_failed = false;
  const auto summary_partial = cfg.output_dir / "summary.csv.partial";
  std::ofstream summary(summary_partial, std::ios::binary);
  summary << "algorithm,dataset,seed,rounds,final_mse,violation_rate,regret_T,"
             "wall_clock_s\n";
  summary.flush();

  for (std::uint64_t seed : cfg.seeds) {
    ExperimentSetup setup;
    try {
      setup = prepare_experiment(cfg, seed);
    } catch (const std::exception& e) {
      log << "seed " << seed << ": setup failed: " << e.what() << '\n';
      any_failed = true;
      continue;
    }
    for (Algorithm algo : cfg.algorithms) {
      const auto name = trace_filename(algo, seed);
      const auto partial = cfg.output_dir / (name + ".partial");
      const auto final_path = cfg.output_dir / name;
      const auto start = std::chrono::steady_clock::now();
      try {
        ExperimentTrace trace =
            run_experiment_with_setup(cfg, algo, seed, setup);
        write_text_file(partial,
                        trace_to_csv(trace, cfg.per_model_estimates));
        std::filesystem::rename(partial, final_path);
        if (cfg.graph_dump && !trace.graph_dump_text.empty()) {
          write_text_file(cfg.output_dir / ("graphdump_" +
                                            algorithm_name(algo) + "_seed" +
                                            std::to_string(seed) + ".txt"),
                          trace.graph_dump_text);
        }
        const auto elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        RunSummaryRow row;
        row.algorithm = trace.algorithm;
        row.dataset = trace.dataset_name;
        row.seed = seed;
        row.rounds = static_cast<int>(trace.records.size());
        row.final_mse = trace.mse_series.empty() ? 0.0 : trace.mse_series.back();
        row.violation_rate = budget_violation_rate(trace, cfg.budget);
        if (trace.has_oracle() && algo == Algorithm::kEflFg &&
            !trace.records.empty()) {
          row.regret_total = cumulative_regret(trace).regret.back();
        }
        row.wall_clock_s = elapsed;
        rows.push_back(row);
        summary << row.algorithm << ',' << row.dataset << ',' << row.seed
                << ',' << row.rounds << ',' << format_real(row.final_mse)
                << ',' << format_real(row.violation_rate) << ',';
        if (row.regret_total) summary << format_real(*row.regret_total);
        summary << ',' << format_real(row.wall_clock_s) << '\n';
        summary.flush();
        if (!quiet) {
          log << algorithm_name(algo) << " seed " << seed << ": "
              << row.rounds << " rounds, final MSE "
              << format_real(row.final_mse) << ", violations "
              << format_real(row.violation_rate) << '\n';
        }
      } catch (const std::exception& e) {
        log << algorithm_name(algo) << " seed " << seed
            << ": run failed: " << e.what() << '\n';
        any_failed = true;
      }
    }
  }
  summary.close();
  if (!any_failed) {
    std::filesystem::rename(summary_partial, cfg.output_dir / "summary.csv");
  }
  return any_failed ? 3 : 0;
}

}  // namespace eflfg
