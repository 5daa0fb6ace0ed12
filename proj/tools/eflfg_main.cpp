#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eflfg/config.hpp"
#include "eflfg/runner.hpp"
#include "eflfg/simulation.hpp"

namespace {

int do_validate(const std::string& config_path) {
  try {
    const auto config = eflfg::parse_config(config_path);
    eflfg::validate_config(config);
    std::cout << "config ok: " << config.algorithms.size() << " algorithm(s), "
              << config.seeds.size() << " seed(s), T=" << config.rounds
              << ", budget=" << config.budget << "\n";
    return 0;
  } catch (const eflfg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const eflfg::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int do_run(const std::string& config_path, const std::string& out_dir,
           std::int64_t seed_override, bool quiet) {
  try {
    const auto config = eflfg::parse_config(config_path);
    std::optional<std::filesystem::path> out;
    if (!out_dir.empty()) out = out_dir;
    std::optional<std::uint64_t> seed;
    if (seed_override >= 0) seed = static_cast<std::uint64_t>(seed_override);
    return eflfg::run_all(config, out, seed, quiet, std::cerr);
  } catch (const eflfg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const eflfg::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int do_zoo(const std::string& config_path, const std::string& dump_path) {
  try {
    const auto config = eflfg::parse_config(config_path);
    eflfg::validate_config(config);
    const auto setup = eflfg::prepare_experiment(config, config.seeds.front());
    eflfg::save_catalog(setup.catalog, dump_path);
    std::cout << "trained " << setup.catalog.size() << " models (seed "
              << config.seeds.front() << ") -> " << dump_path << "\n";
    return 0;
  } catch (const eflfg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const eflfg::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-constrained ensemble federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::int64_t seed_override = -1;
  bool quiet = false;
  std::string dump_path;

  auto* run = app.add_subcommand("run", "Run the configured experiments");
  run->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();
  run->add_option("--out", out_dir, "Output directory override");
  run->add_option("--seed-override", seed_override,
                  "Run only this seed instead of the configured list");
  run->add_flag("--quiet", quiet, "Suppress per-run progress lines");

  auto* validate =
      app.add_subcommand("validate", "Validate a config without running");
  validate->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();

  auto* zoo = app.add_subcommand(
      "zoo", "Train the model catalog and persist it as JSON");
  zoo->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();
  zoo->add_option("--dump", dump_path, "Catalog output path")->required();

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(run)) {
    return do_run(config_path, out_dir, seed_override, quiet);
  }
  if (app.got_subcommand(validate)) {
    return do_validate(config_path);
  }
  return do_zoo(config_path, dump_path);
}
