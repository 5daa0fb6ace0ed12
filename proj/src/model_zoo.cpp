#include "eflfg/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "eflfg/rng.hpp"

namespace eflfg {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double kernel_eval(ModelFamily family, double param, std::span<const double> x,
                   std::span<const double> z) {
  switch (family) {
    case ModelFamily::kGaussianKernel: {
      double sq = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - z[i];
        sq += d * d;
      }
      return std::exp(-sq / (2.0 * param * param));
    }
    case ModelFamily::kLaplacianKernel: {
      double l1 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) l1 += std::abs(x[i] - z[i]);
      return std::exp(-l1 / param);
    }
    case ModelFamily::kPolynomialKernel:
      return std::pow(dot(x, z) + 1.0, param);
    case ModelFamily::kSigmoidKernel:
      return std::tanh(param * dot(x, z));
    case ModelFamily::kMlp:
      break;
  }
  throw std::invalid_argument("kernel_eval: not a kernel family");
}

std::vector<int> pick_anchor_indices(long pretrain_size, int cap,
                                     std::mt19937_64& rng) {
  const int n = static_cast<int>(pretrain_size);
  if (n <= cap) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  auto idx = sample_without_replacement(cap, n, rng);
  std::sort(idx.begin(), idx.end());
  return idx;
}

PretrainedModel train_kernel_model(const ModelSpec& spec,
                                   const PretrainSet& pretrain,
                                   std::uint64_t seed) {
  PretrainedModel model;
  model.spec = spec;
  model.feature_count = pretrain.feature_count;
  auto rng = substream(seed, "kernel-anchors");
  const auto idx = pick_anchor_indices(
      static_cast<long>(pretrain.samples.size()), spec.anchor_cap, rng);
  const int m = static_cast<int>(idx.size());
  model.anchors.reserve(m);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    model.anchors.push_back(pretrain.samples[idx[i]].features);
    y(i) = pretrain.samples[idx[i]].target;
  }

  Eigen::MatrixXd gram(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v =
          kernel_eval(spec.family, spec.kernel_param, model.anchors[i],
                      model.anchors[j]);
      gram(i, j) = v;
      gram(j, i) = v;
    }
    gram(i, i) += spec.ridge;
  }

  Eigen::VectorXd alpha = gram.ldlt().solve(y);
  if (!alpha.allFinite()) {
    // Sigmoid grams can be indefinite; fall back to least squares.
    alpha = gram.colPivHouseholderQr().solve(y);
    if (!alpha.allFinite()) {
      throw NumericError("kernel training: singular system for family " +
                         family_name(spec.family));
    }
  }
  model.dual_coeffs.assign(alpha.data(), alpha.data() + m);
  model.param_count = static_cast<long>(m) + 1;
  return model;
}

struct MlpWorkspace {
  std::vector<Eigen::MatrixXd> weights;  // out x in
  std::vector<Eigen::VectorXd> biases;
};

MlpWorkspace init_mlp(const std::vector<int>& sizes, std::mt19937_64& rng) {
  MlpWorkspace w;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd m(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        m(r, c) = (2.0 * uniform01(rng) - 1.0) * scale;
      }
    }
    w.weights.push_back(std::move(m));
    w.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
  }
  return w;
}

PretrainedModel train_mlp_model(const ModelSpec& spec,
                                const PretrainSet& pretrain,
                                std::uint64_t seed) {
  const int n = static_cast<int>(pretrain.samples.size());
  const int d = pretrain.feature_count;
  std::vector<int> sizes;
  sizes.push_back(d);
  for (int h : spec.hidden_layers) sizes.push_back(h);
  sizes.push_back(1);

  auto rng = substream(seed, "mlp-init");
  MlpWorkspace net = init_mlp(sizes, rng);
  const std::size_t layers = net.weights.size();

  Eigen::MatrixXd x(d, n);
  Eigen::RowVectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(j, i) = pretrain.samples[i].features[j];
    y(i) = pretrain.samples[i].target;
  }

  std::vector<Eigen::MatrixXd> activations(layers + 1);
  std::vector<Eigen::MatrixXd> preacts(layers);
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    activations[0] = x;
    for (std::size_t l = 0; l < layers; ++l) {
      preacts[l] = (net.weights[l] * activations[l]).colwise() + net.biases[l];
      activations[l + 1] =
          l + 1 < layers ? preacts[l].cwiseMax(0.0) : preacts[l];
    }
    const Eigen::RowVectorXd residual = activations[layers].row(0) - y;
    const double loss = residual.squaredNorm() / n;
    if (!std::isfinite(loss)) {
      throw TrainingError("mlp training diverged at epoch " +
                          std::to_string(epoch));
    }
    // Backprop of the mean squared error.
    Eigen::MatrixXd delta = (2.0 / n) * residual;
    for (std::size_t l = layers; l-- > 0;) {
      const Eigen::MatrixXd grad_w = delta * activations[l].transpose();
      const Eigen::VectorXd grad_b = delta.rowwise().sum();
      if (l > 0) {
        delta = (net.weights[l].transpose() * delta).eval();
        delta = delta.array() * (preacts[l - 1].array() > 0.0).cast<double>();
      }
      net.weights[l] -= spec.step_size * grad_w;
      net.biases[l] -= spec.step_size * grad_b;
    }
  }

  PretrainedModel model;
  model.spec = spec;
  model.feature_count = d;
  model.layer_sizes = sizes;
  long params = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = net.weights[l];
    std::vector<double> flat(w.size());
    for (int r = 0; r < w.rows(); ++r) {
      for (int c = 0; c < w.cols(); ++c) {
        flat[static_cast<std::size_t>(r) * w.cols() + c] = w(r, c);
      }
    }
    model.layer_weights.push_back(std::move(flat));
    model.layer_biases.emplace_back(net.biases[l].data(),
                                    net.biases[l].data() + net.biases[l].size());
    params += w.rows() * w.cols() + w.rows();
  }
  model.param_count = params;
  return model;
}

}  // namespace

std::string family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kGaussianKernel: return "gaussian-kernel";
    case ModelFamily::kLaplacianKernel: return "laplacian-kernel";
    case ModelFamily::kPolynomialKernel: return "polynomial-kernel";
    case ModelFamily::kSigmoidKernel: return "sigmoid-kernel";
    case ModelFamily::kMlp: return "mlp";
  }
  throw std::invalid_argument("family_name: unknown family");
}

ModelFamily family_from_name(const std::string& name) {
  if (name == "gaussian-kernel") return ModelFamily::kGaussianKernel;
  if (name == "laplacian-kernel") return ModelFamily::kLaplacianKernel;
  if (name == "polynomial-kernel") return ModelFamily::kPolynomialKernel;
  if (name == "sigmoid-kernel") return ModelFamily::kSigmoidKernel;
  if (name == "mlp") return ModelFamily::kMlp;
  throw ConfigError("unknown model family: '" + name + "'");
}

double PretrainedModel::predict(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != feature_count) {
    throw std::invalid_argument("predict: feature dimension mismatch (got " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(feature_count) + ")");
  }
  if (spec.family != ModelFamily::kMlp) {
    double sum = 0.0;
    for (std::size_t j = 0; j < anchors.size(); ++j) {
      sum += dual_coeffs[j] *
             kernel_eval(spec.family, spec.kernel_param, x, anchors[j]);
    }
    return sum;
  }
  std::vector<double> act(x.begin(), x.end());
  const std::size_t layers = layer_weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = layer_sizes[l];
    const int out = layer_sizes[l + 1];
    std::vector<double> next(out);
    for (int r = 0; r < out; ++r) {
      double v = layer_biases[l][r];
      const double* row = &layer_weights[l][static_cast<std::size_t>(r) * in];
      for (int c = 0; c < in; ++c) v += row[c] * act[c];
      next[r] = (l + 1 < layers) ? std::max(v, 0.0) : v;
    }
    act = std::move(next);
  }
  return act[0];
}

double ModelCatalog::max_cost() const {
  return costs.empty() ? 0.0 : *std::max_element(costs.begin(), costs.end());
}

double ModelCatalog::total_cost() const {
  double s = 0.0;
  for (double c : costs) s += c;
  return s;
}

ZooConfig default_zoo(double ridge, int anchor_cap, int hidden_width,
                      int mlp_epochs, double mlp_step) {
  ZooConfig zoo;
  const double grid[] = {0.01, 0.1, 1.0, 10.0, 100.0};
  auto add_kernel = [&](ModelFamily family, double param) {
    ModelSpec s;
    s.family = family;
    s.kernel_param = param;
    s.ridge = ridge;
    s.anchor_cap = anchor_cap;
    zoo.specs.push_back(s);
  };
  for (double b : grid) add_kernel(ModelFamily::kGaussianKernel, b);
  for (double b : grid) add_kernel(ModelFamily::kLaplacianKernel, b);
  for (int deg = 1; deg <= 5; ++deg) {
    add_kernel(ModelFamily::kPolynomialKernel, static_cast<double>(deg));
  }
  for (double s : grid) add_kernel(ModelFamily::kSigmoidKernel, s);
  for (int hidden : {1, 2}) {
    ModelSpec s;
    s.family = ModelFamily::kMlp;
    s.hidden_layers.assign(hidden, hidden_width);
    s.epochs = mlp_epochs;
    s.step_size = mlp_step;
    zoo.specs.push_back(s);
  }
  return zoo;
}

PretrainedModel train_model(const ModelSpec& spec, const PretrainSet& pretrain,
                            std::uint64_t seed) {
  if (pretrain.samples.empty()) {
    throw TrainingError("train_model: empty pretrain set");
  }
  if (spec.family == ModelFamily::kMlp) {
    return train_mlp_model(spec, pretrain, seed);
  }
  if (spec.ridge <= 0.0) {
    throw ConfigError("train_model: ridge must be positive");
  }
  return train_kernel_model(spec, pretrain, seed);
}

double model_cost(const PretrainedModel& model, long max_params) {
  if (model.param_count < 1 || max_params < model.param_count) {
    throw std::invalid_argument("model_cost: invalid parameter counts");
  }
  return static_cast<double>(model.param_count) /
         static_cast<double>(max_params);
}

long planned_anchor_count(const ModelSpec& spec, long pretrain_size) {
  return std::min<long>(pretrain_size, spec.anchor_cap);
}

long planned_param_count(const ModelSpec& spec, int feature_count,
                         long pretrain_size) {
  if (spec.family != ModelFamily::kMlp) {
    return planned_anchor_count(spec, pretrain_size) + 1;
  }
  long params = 0;
  int in = feature_count;
  for (int h : spec.hidden_layers) {
    params += static_cast<long>(in) * h + h;
    in = h;
  }
  params += in + 1;
  return params;
}

ModelCatalog build_catalog(const ZooConfig& zoo, const PretrainSet& pretrain,
                           std::uint64_t master_seed) {
  if (zoo.specs.empty()) {
    throw ConfigError("build_catalog: zoo has no model specs");
  }
  ModelCatalog catalog;
  for (std::size_t i = 0; i < zoo.specs.size(); ++i) {
    const std::uint64_t seed = substream(master_seed, "model-training", i)();
    try {
      PretrainedModel m = train_model(zoo.specs[i], pretrain, seed);
      m.id = static_cast<ModelId>(i);
      catalog.models.push_back(std::move(m));
    } catch (const std::exception& e) {
      throw TrainingError("model " + std::to_string(i) + " (" +
                          family_name(zoo.specs[i].family) +
                          "): " + e.what());
    }
  }
  long max_params = 0;
  for (const auto& m : catalog.models) {
    max_params = std::max(max_params, m.param_count);
  }
  catalog.costs.reserve(catalog.models.size());
  for (const auto& m : catalog.models) {
    catalog.costs.push_back(model_cost(m, max_params));
  }
  return catalog;
}

nlohmann::json catalog_to_json(const ModelCatalog& catalog) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : catalog.models) {
    nlohmann::json j;
    j["id"] = m.id;
    j["family"] = family_name(m.spec.family);
    j["feature_count"] = m.feature_count;
    j["param_count"] = m.param_count;
    if (m.spec.family != ModelFamily::kMlp) {
      j["kernel_param"] = m.spec.kernel_param;
      j["ridge"] = m.spec.ridge;
      j["anchor_cap"] = m.spec.anchor_cap;
      j["anchors"] = m.anchors;
      j["dual_coeffs"] = m.dual_coeffs;
    } else {
      j["hidden_layers"] = m.spec.hidden_layers;
      j["epochs"] = m.spec.epochs;
      j["step_size"] = m.spec.step_size;
      j["layer_sizes"] = m.layer_sizes;
      j["layer_weights"] = m.layer_weights;
      j["layer_biases"] = m.layer_biases;
    }
    models.push_back(std::move(j));
  }
  return nlohmann::json{{"format", "eflfg-catalog"},
                        {"version", 1},
                        {"models", std::move(models)},
                        {"costs", catalog.costs}};
}

ModelCatalog catalog_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "eflfg-catalog" || j.value("version", 0) != 1) {
    throw ParseError("catalog dump: unrecognized format or version");
  }
  ModelCatalog catalog;
  for (const auto& mj : j.at("models")) {
    PretrainedModel m;
    m.id = mj.at("id").get<ModelId>();
    m.spec.family = family_from_name(mj.at("family").get<std::string>());
    m.feature_count = mj.at("feature_count").get<int>();
    m.param_count = mj.at("param_count").get<long>();
    if (m.spec.family != ModelFamily::kMlp) {
      m.spec.kernel_param = mj.at("kernel_param").get<double>();
      m.spec.ridge = mj.at("ridge").get<double>();
      m.spec.anchor_cap = mj.at("anchor_cap").get<int>();
      m.anchors = mj.at("anchors").get<std::vector<std::vector<double>>>();
      m.dual_coeffs = mj.at("dual_coeffs").get<std::vector<double>>();
    } else {
      m.spec.hidden_layers = mj.at("hidden_layers").get<std::vector<int>>();
      m.spec.epochs = mj.at("epochs").get<int>();
      m.spec.step_size = mj.at("step_size").get<double>();
      m.layer_sizes = mj.at("layer_sizes").get<std::vector<int>>();
      m.layer_weights =
          mj.at("layer_weights").get<std::vector<std::vector<double>>>();
      m.layer_biases =
          mj.at("layer_biases").get<std::vector<std::vector<double>>>();
    }
    catalog.models.push_back(std::move(m));
  }
  catalog.costs = j.at("costs").get<std::vector<double>>();
  if (catalog.costs.size() != catalog.models.size()) {
    throw ParseError("catalog dump: cost/model count mismatch");
  }
  return catalog;
}

void save_catalog(const ModelCatalog& catalog,
                  const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write catalog dump: " + p.string());
  out << catalog_to_json(catalog).dump(1) << "\n";
}

ModelCatalog load_catalog(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError("cannot open catalog dump: " + p.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("catalog dump '" + p.string() + "': " + e.what());
  }
  return catalog_from_json(j);
}

}  // namespace eflfg
