#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "eflfg/model_zoo.hpp"
#include "eflfg/rng.hpp"

using namespace eflfg;

namespace {

PretrainSet linear_pretrain(int n, int d, std::uint64_t seed) {
  // y = mean(x), exactly representable by a degree-1 polynomial kernel model.
  PretrainSet pre;
  pre.feature_count = d;
  auto rng = substream(seed, "test-linear-pretrain");
  for (int i = 0; i < n; ++i) {
    DataSample s;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) {
      s.features.push_back(uniform01(rng));
      mean += s.features.back();
    }
    s.target = mean / d;
    pre.samples.push_back(std::move(s));
  }
  return pre;
}

// Test-side oracle: ordinary least squares fit of y on (x, 1) via normal
// equations, independent of the kernel machinery.
std::vector<double> least_squares_fit(const PretrainSet& pre) {
  const int d = pre.feature_count + 1;
  std::vector<double> ata(static_cast<std::size_t>(d) * d, 0.0);
  std::vector<double> aty(d, 0.0);
  for (const auto& s : pre.samples) {
    std::vector<double> row(s.features.begin(), s.features.end());
    row.push_back(1.0);
    for (int i = 0; i < d; ++i) {
      aty[i] += row[i] * s.target;
      for (int j = 0; j < d; ++j) ata[static_cast<std::size_t>(i) * d + j] += row[i] * row[j];
    }
  }
  // Gaussian elimination with partial pivoting.
  std::vector<double> m(ata);
  std::vector<double> b(aty);
  for (int col = 0; col < d; ++col) {
    int pivot = col;
    for (int r = col + 1; r < d; ++r) {
      if (std::abs(m[static_cast<std::size_t>(r) * d + col]) >
          std::abs(m[static_cast<std::size_t>(pivot) * d + col])) {
        pivot = r;
      }
    }
    for (int c = 0; c < d; ++c) {
      std::swap(m[static_cast<std::size_t>(col) * d + c],
                m[static_cast<std::size_t>(pivot) * d + c]);
    }
    std::swap(b[col], b[pivot]);
    for (int r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = m[static_cast<std::size_t>(r) * d + col] /
                       m[static_cast<std::size_t>(col) * d + col];
      for (int c = 0; c < d; ++c) {
        m[static_cast<std::size_t>(r) * d + c] -=
            f * m[static_cast<std::size_t>(col) * d + c];
      }
      b[r] -= f * b[col];
    }
  }
  std::vector<double> coef(d);
  for (int i = 0; i < d; ++i) coef[i] = b[i] / m[static_cast<std::size_t>(i) * d + i];
  return coef;
}

}  // namespace

TEST_CASE("gaussian kernel interpolates two points") {
  PretrainSet pre;
  pre.feature_count = 1;
  pre.samples = {{{0.0}, 0.0}, {{1.0}, 1.0}};
  ModelSpec spec;
  spec.family = ModelFamily::kGaussianKernel;
  spec.kernel_param = 1.0;
  spec.ridge = 1e-6;
  const auto model = train_model(spec, pre, 1);
  CHECK(std::abs(model.predict(std::vector<double>{0.0}) - 0.0) < 1e-3);
  CHECK(std::abs(model.predict(std::vector<double>{1.0}) - 1.0) < 1e-3);
}

TEST_CASE("degree-1 polynomial kernel recovers exactly linear data") {
  const auto pre = linear_pretrain(120, 3, 11);
  ModelSpec spec;
  spec.family = ModelFamily::kPolynomialKernel;
  spec.kernel_param = 1.0;
  spec.ridge = 1e-8;
  const auto model = train_model(spec, pre, 2);

  const auto heldout = linear_pretrain(50, 3, 99);
  // Cross-check the data itself against the least-squares oracle first.
  const auto coef = least_squares_fit(pre);
  double oracle_err = 0.0;
  double model_err = 0.0;
  for (const auto& s : heldout.samples) {
    double fit = coef[3];
    for (int j = 0; j < 3; ++j) fit += coef[j] * s.features[j];
    oracle_err += (fit - s.target) * (fit - s.target);
    const double pred = model.predict(s.features);
    model_err += (pred - s.target) * (pred - s.target);
  }
  oracle_err /= heldout.samples.size();
  model_err /= heldout.samples.size();
  CHECK(oracle_err < 1e-10);  // data is exactly linear
  CHECK(model_err <= 1e-4);
}

TEST_CASE("kernel predictions match a hand-computed sum") {
  PretrainedModel model;
  model.spec.family = ModelFamily::kGaussianKernel;
  model.spec.kernel_param = 0.5;
  model.feature_count = 1;

  SUBCASE("single anchor, unit coefficient") {
    model.anchors = {{0.3}};
    model.dual_coeffs = {1.0};
    CHECK(model.predict(std::vector<double>{0.3}) == doctest::Approx(1.0));
  }
  SUBCASE("zero coefficients predict zero everywhere") {
    model.anchors = {{0.3}, {0.8}};
    model.dual_coeffs = {0.0, 0.0};
    CHECK(model.predict(std::vector<double>{0.1}) == 0.0);
    CHECK(model.predict(std::vector<double>{0.9}) == 0.0);
  }
  SUBCASE("two anchors, hand-evaluated") {
    model.anchors = {{0.0}, {1.0}};
    model.dual_coeffs = {2.0, -1.0};
    const double x = 0.25;
    const double bw = 0.5;
    const double expect = 2.0 * std::exp(-(x * x) / (2 * bw * bw)) -
                          std::exp(-((x - 1) * (x - 1)) / (2 * bw * bw));
    CHECK(model.predict(std::vector<double>{x}) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("predict rejects dimension mismatches") {
  PretrainedModel model;
  model.spec.family = ModelFamily::kLaplacianKernel;
  model.feature_count = 2;
  model.anchors = {{0.0, 0.0}};
  model.dual_coeffs = {1.0};
  CHECK_THROWS_AS(model.predict(std::vector<double>{0.5}),
                  std::invalid_argument);
}

TEST_CASE("mlp with zero epochs is the bit-stable initialization") {
  const auto pre = linear_pretrain(40, 2, 5);
  ModelSpec spec;
  spec.family = ModelFamily::kMlp;
  spec.hidden_layers = {25};
  spec.epochs = 0;
  const auto a = train_model(spec, pre, 31);
  const auto b = train_model(spec, pre, 31);
  CHECK(a.layer_weights == b.layer_weights);
  CHECK(a.layer_biases == b.layer_biases);
  const std::vector<double> x{0.2, 0.9};
  CHECK(a.predict(x) == b.predict(x));
}

TEST_CASE("mlp training reduces loss on linear data") {
  const auto pre = linear_pretrain(100, 2, 6);
  ModelSpec spec;
  spec.family = ModelFamily::kMlp;
  spec.hidden_layers = {25};
  spec.epochs = 300;
  spec.step_size = 0.05;
  const auto trained = train_model(spec, pre, 8);
  spec.epochs = 0;
  const auto untrained = train_model(spec, pre, 8);
  double loss_trained = 0.0, loss_untrained = 0.0;
  for (const auto& s : pre.samples) {
    loss_trained += squared_error(trained.predict(s.features), s.target);
    loss_untrained += squared_error(untrained.predict(s.features), s.target);
  }
  CHECK(loss_trained < 0.5 * loss_untrained);
}

TEST_CASE("model_cost is the normalized parameter ratio") {
  PretrainedModel m;
  m.param_count = 50;
  CHECK(model_cost(m, 100) == 0.5);
  m.param_count = 100;
  CHECK(model_cost(m, 100) == 1.0);
  m.param_count = 1;
  CHECK(model_cost(m, 1000) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK_THROWS_AS(model_cost(m, 0), std::invalid_argument);
}

TEST_CASE("default catalog has 22 models with costs in (0,1]") {
  const auto pre = linear_pretrain(80, 3, 21);
  const auto catalog = build_catalog(default_zoo(1e-3, 80, 25, 20, 0.05),
                                     pre, 77);
  CHECK(catalog.size() == 22);
  double max_cost = 0.0;
  for (double c : catalog.costs) {
    CHECK(c > 0.0);
    CHECK(c <= 1.0);
    max_cost = std::max(max_cost, c);
  }
  CHECK(max_cost == 1.0);

  // MLP parameter counts by the fan-in/fan-out formula, d = 3. At this small
  // anchor count the two-hidden-layer net is the priciest model.
  CHECK(catalog.models[20].param_count == (3 * 25 + 25) + (25 + 1));
  CHECK(catalog.models[21].param_count ==
        (3 * 25 + 25) + (25 * 25 + 25) + (25 + 1));
  CHECK(catalog.costs[21] == 1.0);
  // Kernel models all share the anchor count 80, hence cost 81/776.
  for (int k = 0; k < 20; ++k) {
    CHECK(catalog.models[k].param_count == 81);
    CHECK(catalog.costs[k] == doctest::Approx(81.0 / 776.0).epsilon(1e-15));
  }
}

TEST_CASE("singleton zoo normalizes to cost 1") {
  const auto pre = linear_pretrain(30, 2, 3);
  ZooConfig zoo;
  ModelSpec spec;
  spec.family = ModelFamily::kGaussianKernel;
  spec.kernel_param = 1.0;
  zoo.specs.push_back(spec);
  const auto catalog = build_catalog(zoo, pre, 5);
  CHECK(catalog.size() == 1);
  CHECK(catalog.costs[0] == 1.0);
}

TEST_CASE("retraining with the same seed is bit-stable") {
  const auto pre = linear_pretrain(60, 2, 13);
  ModelSpec spec;
  spec.family = ModelFamily::kSigmoidKernel;
  spec.kernel_param = 10.0;
  spec.anchor_cap = 40;  // forces a seeded anchor subsample
  const auto a = train_model(spec, pre, 17);
  const auto b = train_model(spec, pre, 17);
  CHECK(a.dual_coeffs == b.dual_coeffs);
  CHECK(a.anchors == b.anchors);
  CHECK(a.param_count == 41);
}

TEST_CASE("catalog json dump round-trips predictions exactly") {
  const auto pre = linear_pretrain(40, 2, 19);
  ZooConfig zoo;
  ModelSpec k;
  k.family = ModelFamily::kLaplacianKernel;
  k.kernel_param = 0.1;
  zoo.specs.push_back(k);
  ModelSpec m;
  m.family = ModelFamily::kMlp;
  m.hidden_layers = {25};
  m.epochs = 50;
  zoo.specs.push_back(m);
  const auto catalog = build_catalog(zoo, pre, 23);

  const auto path = std::filesystem::temp_directory_path() / "eflfg_zoo.json";
  save_catalog(catalog, path);
  const auto loaded = load_catalog(path);
  std::filesystem::remove(path);

  REQUIRE(loaded.size() == catalog.size());
  CHECK(loaded.costs == catalog.costs);
  const std::vector<double> x{0.4, 0.7};
  for (int i = 0; i < catalog.size(); ++i) {
    CHECK(loaded.models[i].predict(x) == catalog.models[i].predict(x));
  }
}
