#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eflfg/rng.hpp"
#include "eflfg/runner.hpp"
#include "eflfg/simulation.hpp"
#include "test_helpers.hpp"

using namespace eflfg;

TEST_CASE("client_count formula") {
  CHECK(client_count(10.0, 1.0, 4, 100) == 2);  // floor(10/5)
  CHECK(client_count(10.0, 1.0, 4, 1) == 1);    // n_max binds
  CHECK(client_count(1000.0, 1e-9, 3, 5) == 5); // tiny loss bandwidth: cap binds
  CHECK_THROWS_AS(client_count(1.0, 1.0, 1, 10), BandwidthError);
  CHECK_THROWS_AS(client_count(-1.0, 1.0, 1, 10), std::invalid_argument);
}

TEST_CASE("select_clients") {
  auto rng = substream(31, "test-clients");
  SUBCASE("selecting everyone returns everyone") {
    CHECK(select_clients(5, 5, rng) == std::vector<int>{0, 1, 2, 3, 4});
  }
  SUBCASE("deterministic for the same stream state") {
    auto a = substream(32, "test-clients-b");
    auto b = substream(32, "test-clients-b");
    for (int i = 0; i < 20; ++i) {
      CHECK(select_clients(3, 9, a) == select_clients(3, 9, b));
    }
  }
  SUBCASE("single-client pick is uniform within 3 sigma") {
    const int n = 100000;
    const int clients = 10;
    std::vector<int> counts(clients, 0);
    for (int i = 0; i < n; ++i) ++counts[select_clients(1, clients, rng)[0]];
    const double p = 1.0 / clients;
    const double sigma = std::sqrt(p * (1 - p) / n);
    for (int c = 0; c < clients; ++c) {
      CHECK(std::abs(counts[c] / static_cast<double>(n) - p) <= 3 * sigma);
    }
  }
  SUBCASE("oversized requests are rejected") {
    CHECK_THROWS_AS(select_clients(6, 5, rng), std::invalid_argument);
  }
}

TEST_CASE("single-model zoo runs degenerate rounds") {
  auto cfg = testing::small_config(10, 1);
  const auto trace = run_experiment(cfg, Algorithm::kEflFg, 1);
  REQUIRE(trace.records.size() == 10);
  for (const auto& rec : trace.records) {
    CHECK(rec.transmitted == std::vector<ModelId>{0});
    CHECK(rec.pmf == std::vector<double>{1.0});
    CHECK(rec.drawn == 0);
    CHECK(rec.observation_probs[0] == 1.0);
    // Everything observed: the estimate equals the summed loss exactly.
    CHECK(rec.loss_estimates[0] ==
          doctest::Approx(rec.member_summed_losses[0]).epsilon(1e-15));
  }
  // K=1 regret is identically zero.
  const auto reg = cumulative_regret(trace);
  for (double r : reg.regret) CHECK(r == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("reruns with the same seed are byte-identical") {
  auto cfg = testing::small_config(40, 4);
  const auto a = run_experiment(cfg, Algorithm::kEflFg, 7);
  const auto b = run_experiment(cfg, Algorithm::kEflFg, 7);
  CHECK(trace_to_csv(a, true) == trace_to_csv(b, true));
  const auto c = run_experiment(cfg, Algorithm::kEflFg, 8);
  CHECK(trace_to_csv(a, false) != trace_to_csv(c, false));
}

TEST_CASE("generous budget transmits the whole zoo each round") {
  auto cfg = testing::small_config(25, 3);
  cfg.budget = 50.0;  // above the total catalog cost
  const auto trace = run_experiment(cfg, Algorithm::kEflFg, 3);
  for (const auto& rec : trace.records) {
    CHECK(rec.transmitted.size() == 3);
    CHECK(rec.transmitted_cost <= cfg.budget);
    CHECK(rec.dominating_set_size == 1);
  }
}

TEST_CASE("rounds respect the hard budget and bandwidth constraints") {
  auto cfg = testing::small_config(80, 5);
  const auto trace = run_experiment(cfg, Algorithm::kEflFg, 11);
  for (const auto& rec : trace.records) {
    CHECK(rec.transmitted_cost <= cfg.budget);
    const double used = static_cast<double>(rec.clients.size()) *
                        cfg.bandwidth_loss *
                        static_cast<double>(rec.transmitted.size() + 1);
    CHECK(used <= cfg.bandwidth_total);
    CHECK(rec.clients.size() >= 1);
    CHECK(rec.jensen_margin <= 1e-12);
    // The drawn node's own estimate divides by q >= p > 0.
    CHECK(rec.observation_probs[rec.drawn] >= rec.pmf[rec.drawn] - 1e-15);
  }
}

TEST_CASE("bandwidth-infeasible rounds fail with the round index") {
  auto cfg = testing::small_config(5, 2);
  cfg.bandwidth_total = 1.0;  // floor(1/(1*(deg+1))) = 0 for any degree >= 1
  try {
    run_experiment(cfg, Algorithm::kEflFg, 1);
    FAIL("expected BandwidthError");
  } catch (const BandwidthError& e) {
    CHECK(std::string(e.what()).find("round 1") != std::string::npos);
  }
}

TEST_CASE("mse_at matches a direct double sum") {
  ExperimentTrace trace;
  trace.model_count = 1;
  RoundRecord r1;
  r1.t = 1;
  r1.clients = {0, 1};
  r1.realized_loss_mean = 0.5 * (0.01 + 0.04);
  RoundRecord r2;
  r2.t = 2;
  r2.clients = {0};
  r2.realized_loss_mean = 0.09;
  trace.records = {r1, r2};
  CHECK(mse_at(trace, 1) == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(mse_at(trace, 2) == doctest::Approx((0.025 + 0.09) / 2).epsilon(1e-15));
  CHECK_THROWS_AS(mse_at(trace, 3), std::invalid_argument);

  // Perfect predictions give zero, single-round single-client squares.
  RoundRecord r3;
  r3.realized_loss_mean = 0.0;
  ExperimentTrace perfect;
  perfect.records = {r3};
  CHECK(mse_at(perfect, 1) == 0.0);
}

TEST_CASE("budget_violation_rate counts strict violations") {
  ExperimentTrace trace;
  for (double cost : {1.0, 4.0, 2.9, 3.0}) {
    RoundRecord r;
    r.transmitted_cost = cost;
    trace.records.push_back(r);
  }
  CHECK(budget_violation_rate(trace, 3.0) == doctest::Approx(0.25));
  CHECK(budget_violation_rate(ExperimentTrace{}, 3.0) == 0.0);
}

TEST_CASE("cumulative regret equals an independent recomputation") {
  auto cfg = testing::small_config(5, 3);
  const auto trace = run_experiment(cfg, Algorithm::kEflFg, 13);
  const auto series = cumulative_regret(trace);
  REQUIRE(series.regret.size() == 5);

  const int k_count = trace.model_count;
  for (std::size_t t = 0; t < 5; ++t) {
    // Recompute from raw trace data, summing from scratch each time.
    double expected_sum = 0.0;
    for (std::size_t tau = 0; tau <= t; ++tau) {
      expected_sum += *trace.records[tau].expected_ensemble_loss;
    }
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < k_count; ++k) {
      double cum = 0.0;
      for (std::size_t tau = 0; tau <= t; ++tau) {
        cum += trace.oracle_member_losses[tau][k];
      }
      best = std::min(best, cum);
    }
    CHECK(series.regret[t] ==
          doctest::Approx(expected_sum - best).epsilon(1e-12));
  }

  // Without the oracle channel the series is unavailable.
  auto no_oracle = cfg;
  no_oracle.oracle = false;
  const auto blind = run_experiment(no_oracle, Algorithm::kEflFg, 13);
  CHECK_THROWS_AS(cumulative_regret(blind), DiagnosticUnavailable);
}

TEST_CASE("identical models give zero regret") {
  auto cfg = testing::small_config(8, 1);
  cfg.zoo.specs.front().anchor_cap = 2000;  // no subsampling: models coincide
  cfg.zoo.specs = std::vector<ModelSpec>(3, cfg.zoo.specs.front());
  cfg.budget = 3.0;
  const auto trace = run_experiment(cfg, Algorithm::kEflFg, 2);
  const auto series = cumulative_regret(trace);
  for (double r : series.regret) {
    CHECK(r == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("T=0 produces an empty but valid trace") {
  auto cfg = testing::small_config(0, 2);
  const auto trace = run_experiment(cfg, Algorithm::kEflFg, 1);
  CHECK(trace.records.empty());
  const auto csv = trace_to_csv(trace, false);
  CHECK(csv.find("t,I_t,S_t,") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);  // header only
}

TEST_CASE("trace csv shape") {
  auto cfg = testing::small_config(4, 2);
  cfg.alpha_diagnostic = true;
  const auto trace = run_experiment(cfg, Algorithm::kEflFg, 5);
  const auto csv = trace_to_csv(trace, false);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "t,I_t,S_t,cost,n_clients,realized_ensemble_loss_mean,"
        "expected_ensemble_loss,mse_t,dom_set_size,alpha,algorithm");
  std::string row;
  int rows = 0;
  while (std::getline(lines, row)) {
    ++rows;
    CHECK(std::count(row.begin(), row.end(), ',') == 10);
    CHECK(row.find("efl-fg") != std::string::npos);
  }
  CHECK(rows == 4);
}

TEST_CASE("runner writes traces and a summary") {
  const auto out =
      std::filesystem::temp_directory_path() / "eflfg_runner_test";
  std::filesystem::remove_all(out);
  auto cfg = testing::small_config(12, 3);
  cfg.algorithms = {Algorithm::kEflFg, Algorithm::kFullEnsemble};
  cfg.seeds = {1, 2, 3};
  cfg.budget = 2.0;
  std::ostringstream log;
  const int rc = run_all(cfg, out, std::nullopt, true, log);
  CHECK(rc == 0);

  int trace_files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(out)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("trace_", 0) == 0) ++trace_files;
    CHECK(name.find(".partial") == std::string::npos);
  }
  CHECK(trace_files == 6);

  std::ifstream summary(out / "summary.csv");
  REQUIRE(summary.good());
  std::string line;
  std::getline(summary, line);
  CHECK(line ==
        "algorithm,dataset,seed,rounds,final_mse,violation_rate,regret_T,"
        "wall_clock_s");
  int rows = 0;
  while (std::getline(summary, line)) ++rows;
  CHECK(rows == 6);

  // Rerun: trace files must be byte-identical.
  const auto before = [&] {
    std::ifstream f(out / "trace_efl-fg_seed2.csv", std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }();
  const int rc2 = run_all(cfg, out, std::nullopt, true, log);
  CHECK(rc2 == 0);
  const auto after = [&] {
    std::ifstream f(out / "trace_efl-fg_seed2.csv", std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }();
  CHECK(before == after);
  std::filesystem::remove_all(out);
}

TEST_CASE("graph dump flag captures per-round adjacency") {
  auto cfg = testing::small_config(3, 2);
  cfg.graph_dump = true;
  const auto trace = run_experiment(cfg, Algorithm::kEflFg, 4);
  CHECK(trace.graph_dump_text.find("t=1\n") != std::string::npos);
  CHECK(trace.graph_dump_text.find("t=3\n") != std::string::npos);
  CHECK(trace.graph_dump_text.find("D:") != std::string::npos);
}
