#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "eflfg/dataset.hpp"
#include "eflfg/rng.hpp"

using namespace eflfg;

namespace {

std::filesystem::path write_temp_csv(const std::string& name,
                                     const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("load_dataset parses a small csv") {
  const auto path = write_temp_csv("eflfg_small.csv",
                                   "a,b,y\n"
                                   "1,2,3\n"
                                   "4,5,6\n"
                                   "7,8,9\n");
  const auto ds = load_dataset(path, std::string("y"));
  CHECK(ds.samples.size() == 3);
  CHECK(ds.feature_count == 2);
  CHECK(ds.samples[0].features[0] == 1.0);
  CHECK(ds.samples[2].target == 9.0);
  // Target addressed by index works the same.
  const auto ds2 = load_dataset(path, 2);
  CHECK(ds2.samples[1].target == 6.0);
  std::filesystem::remove(path);
}

TEST_CASE("load_dataset rejects bad inputs with located errors") {
  const auto header_only = write_temp_csv("eflfg_header.csv", "a,b,y\n");
  CHECK_THROWS_AS(load_dataset(header_only, 2), ParseError);
  std::filesystem::remove(header_only);

  const auto bad_cell = write_temp_csv("eflfg_badcell.csv",
                                       "a,y\n1,2\nX,4\n");
  try {
    load_dataset(bad_cell, 1);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("column 1") != std::string::npos);
  }
  std::filesystem::remove(bad_cell);

  const auto ragged = write_temp_csv("eflfg_ragged.csv", "a,b,y\n1,2,3\n4,5\n");
  CHECK_THROWS_AS(load_dataset(ragged, 2), ParseError);
  std::filesystem::remove(ragged);

  CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv", 0), ParseError);
}

TEST_CASE("normalize_minmax maps columns to [0,1]") {
  Dataset ds;
  ds.feature_count = 2;
  // Feature 0: {2,4,6}; feature 1 constant; target {1,2,4}.
  ds.samples = {{{2, 7}, 1}, {{4, 7}, 2}, {{6, 7}, 4}};
  const auto norm = normalize_minmax(ds);
  CHECK(norm.samples[0].features[0] == 0.0);
  CHECK(norm.samples[1].features[0] == 0.5);
  CHECK(norm.samples[2].features[0] == 1.0);
  for (const auto& s : norm.samples) CHECK(s.features[1] == 0.5);
  CHECK(norm.samples[0].target == 0.0);
  CHECK(norm.samples[1].target == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(norm.samples[2].target == 1.0);
}

TEST_CASE("normalize_minmax is idempotent") {
  auto rng = substream(5, "test-norm");
  Dataset ds;
  ds.feature_count = 3;
  for (int i = 0; i < 50; ++i) {
    DataSample s;
    for (int j = 0; j < 3; ++j) s.features.push_back(10.0 * uniform01(rng) - 3.0);
    s.target = 100.0 * uniform01(rng);
    ds.samples.push_back(s);
  }
  const auto once = normalize_minmax(ds);
  const auto twice = normalize_minmax(once);
  for (std::size_t i = 0; i < once.samples.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(twice.samples[i].features[j] ==
            doctest::Approx(once.samples[i].features[j]).epsilon(1e-15));
      CHECK(once.samples[i].features[j] >= 0.0);
      CHECK(once.samples[i].features[j] <= 1.0);
    }
  }
}

TEST_CASE("partition splits exactly and deterministically") {
  Dataset ds;
  ds.feature_count = 1;
  for (int i = 0; i < 100; ++i) {
    ds.samples.push_back({{i / 99.0}, i / 99.0});
  }
  SplitPlan plan{0.1, 77, 9, 10};
  auto [pre, stream] = partition(ds, plan);
  CHECK(pre.samples.size() == 10);
  CHECK(stream.samples.size() == 90);

  // Disjoint and covering: every original sample appears exactly once.
  std::multiset<double> all;
  for (const auto& s : pre.samples) all.insert(s.target);
  for (const auto& s : stream.samples) all.insert(s.target);
  CHECK(all.size() == 100);
  std::multiset<double> expected;
  for (const auto& s : ds.samples) expected.insert(s.target);
  CHECK(all == expected);

  // Same seed reproduces the same split.
  auto [pre2, stream2] = partition(ds, plan);
  for (std::size_t i = 0; i < pre.samples.size(); ++i) {
    CHECK(pre.samples[i].target == pre2.samples[i].target);
  }
}

TEST_CASE("client stream wraps around deterministically") {
  Dataset ds;
  ds.feature_count = 1;
  for (int i = 0; i < 100; ++i) ds.samples.push_back({{0.0}, 1.0 * i});
  SplitPlan plan{0.1, 3, 20, 10};
  auto [pre, stream] = partition(ds, plan);
  CHECK(stream.samples.size() == 90);
  // Slot (t,i) maps to stream index ((t-1)*N + i) mod 90.
  for (int t = 1; t <= 20; ++t) {
    for (int i = 0; i < 10; ++i) {
      const auto& got = stream.sample(t, i);
      const auto& want = stream.samples[((t - 1) * 10 + i) % 90];
      CHECK(got.target == want.target);
    }
  }
}

TEST_CASE("partition handles the minimal split and rejects undersized data") {
  Dataset two;
  two.feature_count = 1;
  two.samples = {{{0.1}, 0.2}, {{0.3}, 0.4}};
  auto [pre, stream] = partition(two, SplitPlan{0.5, 1, 1, 1});
  CHECK(pre.samples.size() == 1);
  CHECK(stream.samples.size() == 1);

  Dataset one;
  one.feature_count = 1;
  one.samples = {{{0.1}, 0.2}};
  CHECK_THROWS_AS(partition(one, SplitPlan{0.2, 1, 1, 1}), ConfigError);
}

TEST_CASE("synthetic linear noiseless targets equal their features") {
  SyntheticSpec spec;
  spec.feature_count = 1;
  spec.sample_count = 5;
  spec.noise = 0.0;
  spec.family = SyntheticSpec::Family::kLinear;
  spec.slope = 1.0;
  const auto ds = synthetic_dataset(spec, 123);
  for (const auto& s : ds.samples) CHECK(s.target == s.features[0]);
  const auto norm = normalize_minmax(ds);
  for (const auto& s : norm.samples) {
    CHECK(s.target == doctest::Approx(s.features[0]).epsilon(1e-12));
  }
}

TEST_CASE("synthetic generation is deterministic") {
  SyntheticSpec spec;
  spec.feature_count = 3;
  spec.sample_count = 64;
  spec.noise = 0.1;
  const auto a = synthetic_dataset(spec, 9);
  const auto b = synthetic_dataset(spec, 9);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].target == b.samples[i].target);
    CHECK(a.samples[i].features == b.samples[i].features);
  }
  CHECK_THROWS_AS(synthetic_dataset(SyntheticSpec{}, 1), ConfigError);
}

TEST_CASE("synthetic target variance matches the closed form") {
  // y = mean(x_1..x_d) + noise, so Var(y) = 1/(12 d) + sigma^2.
  SyntheticSpec spec;
  spec.feature_count = 3;
  spec.sample_count = 1000;
  spec.noise = 0.05;
  spec.family = SyntheticSpec::Family::kLinear;
  spec.slope = 1.0;
  const auto ds = synthetic_dataset(spec, 2024);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& s : ds.samples) {
    sum += s.target;
    sumsq += s.target * s.target;
  }
  const double n = static_cast<double>(ds.samples.size());
  const double var = sumsq / n - (sum / n) * (sum / n);
  const double analytic = 1.0 / 36.0 + 0.05 * 0.05;
  CHECK(std::abs(var - analytic) < 0.2 * analytic);
}
