#include "eflfg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace eflfg {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_key(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("key '" + key + "' in " + where + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, const std::string& where,
         T fallback) {
  if (!j.contains(key)) return fallback;
  return get_key<T>(j, key, where);
}

RateSpec parse_rate(const json& j, const std::string& key) {
  RateSpec r;
  if (!j.contains(key)) return r;  // default: 1/sqrt(T)
  const auto& v = j.at(key);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "one-over-sqrt-T") {
      r.kind = RateSpec::Kind::kOneOverSqrtT;
    } else if (s == "theorem-1") {
      r.kind = RateSpec::Kind::kTheorem1;
    } else {
      throw ConfigError("key '" + key + "': unknown rate token '" + s +
                        "' (expected a number, 'one-over-sqrt-T', or 'theorem-1')");
    }
  } else if (v.is_number()) {
    r.kind = RateSpec::Kind::kExplicit;
    r.value = v.get<double>();
    if (!(r.value > 0.0) || !std::isfinite(r.value)) {
      throw ConfigError("key '" + key + "': explicit rate must be positive");
    }
  } else {
    throw ConfigError("key '" + key + "': expected a number or rate token");
  }
  return r;
}

json rate_to_json(const RateSpec& r) {
  switch (r.kind) {
    case RateSpec::Kind::kExplicit: return r.value;
    case RateSpec::Kind::kOneOverSqrtT: return "one-over-sqrt-T";
    case RateSpec::Kind::kTheorem1: return "theorem-1";
  }
  throw std::logic_error("rate_to_json: bad kind");
}

DatasetConfig parse_dataset(const json& j) {
  DatasetConfig d;
  reject_unknown_keys(j,
                      {"type", "path", "target_column", "name", "features",
                       "samples", "noise", "family", "slope"},
                      "dataset");
  const auto type = get_key<std::string>(j, "type", "dataset");
  if (type == "csv") {
    d.kind = DatasetConfig::Kind::kCsv;
    d.csv_path = get_key<std::string>(j, "path", "dataset");
    if (!j.contains("target_column")) {
      throw ConfigError("dataset: csv requires 'target_column' (name or index)");
    }
    const auto& t = j.at("target_column");
    if (t.is_string()) {
      d.target_column = t.get<std::string>();
    } else if (t.is_number_integer()) {
      d.target_index = t.get<int>();
    } else {
      throw ConfigError("dataset: 'target_column' must be a name or an index");
    }
  } else if (type == "synthetic") {
    d.kind = DatasetConfig::Kind::kSynthetic;
    d.synthetic.name = get_or<std::string>(j, "name", "dataset", "synthetic");
    d.synthetic.feature_count = get_key<int>(j, "features", "dataset");
    d.synthetic.sample_count = get_key<int>(j, "samples", "dataset");
    d.synthetic.noise = get_or<double>(j, "noise", "dataset", 0.0);
    d.synthetic.slope = get_or<double>(j, "slope", "dataset", 1.0);
    const auto family = get_or<std::string>(j, "family", "dataset", "linear");
    if (family == "linear") {
      d.synthetic.family = SyntheticSpec::Family::kLinear;
    } else if (family == "sine") {
      d.synthetic.family = SyntheticSpec::Family::kSine;
    } else {
      throw ConfigError("dataset: unknown family '" + family + "'");
    }
    if (d.synthetic.feature_count <= 0 || d.synthetic.sample_count <= 0) {
      throw ConfigError("dataset: synthetic features/samples must be positive");
    }
    if (d.synthetic.noise < 0.0) {
      throw ConfigError("dataset: noise must be >= 0");
    }
  } else {
    throw ConfigError("dataset: unknown type '" + type + "'");
  }
  return d;
}

json dataset_to_json(const DatasetConfig& d) {
  json j;
  if (d.kind == DatasetConfig::Kind::kCsv) {
    j["type"] = "csv";
    j["path"] = d.csv_path.string();
    if (!d.target_column.empty()) {
      j["target_column"] = d.target_column;
    } else {
      j["target_column"] = d.target_index;
    }
  } else {
    j["type"] = "synthetic";
    j["name"] = d.synthetic.name;
    j["features"] = d.synthetic.feature_count;
    j["samples"] = d.synthetic.sample_count;
    j["noise"] = d.synthetic.noise;
    j["slope"] = d.synthetic.slope;
    j["family"] =
        d.synthetic.family == SyntheticSpec::Family::kLinear ? "linear" : "sine";
  }
  return j;
}

ModelSpec parse_model_spec(const json& j, const ZooSettings& defaults) {
  reject_unknown_keys(j,
                      {"family", "param", "hidden_layers", "epochs",
                       "step_size", "ridge", "anchor_cap"},
                      "zoo spec");
  ModelSpec s;
  s.family = family_from_name(get_key<std::string>(j, "family", "zoo spec"));
  s.ridge = get_or<double>(j, "ridge", "zoo spec", defaults.ridge);
  s.anchor_cap = get_or<int>(j, "anchor_cap", "zoo spec", defaults.anchor_cap);
  if (s.family == ModelFamily::kMlp) {
    s.hidden_layers = get_or<std::vector<int>>(j, "hidden_layers", "zoo spec",
                                               {defaults.hidden_width});
    s.epochs = get_or<int>(j, "epochs", "zoo spec", defaults.mlp_epochs);
    s.step_size = get_or<double>(j, "step_size", "zoo spec", defaults.mlp_step);
    if (s.epochs < 0) throw ConfigError("zoo spec: epochs must be >= 0");
  } else {
    s.kernel_param = get_key<double>(j, "param", "zoo spec");
    if (!(s.kernel_param > 0.0)) {
      throw ConfigError("zoo spec: kernel param must be positive");
    }
  }
  return s;
}

json model_spec_to_json(const ModelSpec& s) {
  json j;
  j["family"] = family_name(s.family);
  if (s.family == ModelFamily::kMlp) {
    j["hidden_layers"] = s.hidden_layers;
    j["epochs"] = s.epochs;
    j["step_size"] = s.step_size;
  } else {
    j["param"] = s.kernel_param;
    j["ridge"] = s.ridge;
    j["anchor_cap"] = s.anchor_cap;
  }
  return j;
}

ZooSettings parse_zoo(const json& j) {
  ZooSettings z;
  reject_unknown_keys(j,
                      {"preset", "specs", "ridge", "anchor_cap", "hidden_width",
                       "mlp_epochs", "mlp_step", "load"},
                      "zoo");
  z.ridge = get_or<double>(j, "ridge", "zoo", z.ridge);
  z.anchor_cap = get_or<int>(j, "anchor_cap", "zoo", z.anchor_cap);
  z.hidden_width = get_or<int>(j, "hidden_width", "zoo", z.hidden_width);
  z.mlp_epochs = get_or<int>(j, "mlp_epochs", "zoo", z.mlp_epochs);
  z.mlp_step = get_or<double>(j, "mlp_step", "zoo", z.mlp_step);
  if (!(z.ridge > 0.0)) throw ConfigError("zoo: ridge must be positive");
  if (z.anchor_cap < 1 || z.anchor_cap > 2000) {
    throw ConfigError("zoo: anchor_cap must be in [1, 2000]");
  }
  if (j.contains("load")) {
    z.load_dump = std::filesystem::path(get_key<std::string>(j, "load", "zoo"));
  }
  const auto preset = get_or<std::string>(j, "preset", "zoo", "default-22");
  if (preset == "default-22") {
    z.use_default = true;
    if (j.contains("specs")) {
      throw ConfigError("zoo: 'specs' requires preset 'custom'");
    }
  } else if (preset == "custom") {
    z.use_default = false;
    if (!j.contains("specs") || !j.at("specs").is_array() ||
        j.at("specs").empty()) {
      throw ConfigError("zoo: preset 'custom' requires a non-empty 'specs' array");
    }
    for (const auto& sj : j.at("specs")) {
      z.specs.push_back(parse_model_spec(sj, z));
    }
  } else {
    throw ConfigError("zoo: unknown preset '" + preset + "'");
  }
  return z;
}

json zoo_to_json(const ZooSettings& z) {
  json j;
  j["preset"] = z.use_default ? "default-22" : "custom";
  if (!z.use_default) {
    json specs = json::array();
    for (const auto& s : z.specs) specs.push_back(model_spec_to_json(s));
    j["specs"] = std::move(specs);
  }
  j["ridge"] = z.ridge;
  j["anchor_cap"] = z.anchor_cap;
  j["hidden_width"] = z.hidden_width;
  j["mlp_epochs"] = z.mlp_epochs;
  j["mlp_step"] = z.mlp_step;
  if (z.load_dump) j["load"] = z.load_dump->string();
  return j;
}

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kEflFg: return "efl-fg";
    case Algorithm::kFedboostSurrogate: return "fedboost-surrogate";
    case Algorithm::kFullEnsemble: return "full-ensemble";
  }
  throw std::logic_error("algorithm_name: bad value");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "efl-fg") return Algorithm::kEflFg;
  if (name == "fedboost-surrogate") return Algorithm::kFedboostSurrogate;
  if (name == "full-ensemble") return Algorithm::kFullEnsemble;
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::string DatasetConfig::display_name() const {
  if (kind == Kind::kCsv) return csv_path.stem().string();
  return synthetic.name;
}

ZooConfig ZooSettings::resolve() const {
  if (use_default) {
    return default_zoo(ridge, anchor_cap, hidden_width, mlp_epochs, mlp_step);
  }
  return ZooConfig{specs};
}

double ExperimentConfig::resolve_eta(int model_count) const {
  if (rounds == 0) return 1.0;  // unused, no rounds run
  switch (eta.kind) {
    case RateSpec::Kind::kExplicit:
      return eta.value;
    case RateSpec::Kind::kOneOverSqrtT:
      return 1.0 / std::sqrt(static_cast<double>(rounds));
    case RateSpec::Kind::kTheorem1:
      return std::sqrt(std::log(static_cast<double>(model_count)) /
                       static_cast<double>(rounds));
  }
  throw std::logic_error("resolve_eta: bad kind");
}

double ExperimentConfig::resolve_xi(int model_count) const {
  if (rounds == 0) return 0.0;
  switch (xi.kind) {
    case RateSpec::Kind::kExplicit:
      return xi.value;
    case RateSpec::Kind::kOneOverSqrtT:
      return 1.0 / std::sqrt(static_cast<double>(rounds));
    case RateSpec::Kind::kTheorem1:
      return std::pow(std::log(static_cast<double>(model_count)), 0.75) /
             std::pow(static_cast<double>(rounds), 0.25);
  }
  throw std::logic_error("resolve_xi: bad kind");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(
      j,
      {"dataset", "zoo", "budget", "rounds", "clients", "n_max",
       "bandwidth_total", "bandwidth_loss", "eta", "xi", "algorithms", "seeds",
       "output_dir", "pretrain_fraction", "oracle", "graph_dump",
       "alpha_diagnostic", "per_model_estimates"},
      "config");
  ExperimentConfig c;
  if (!j.contains("dataset")) throw ConfigError("config requires 'dataset'");
  c.dataset = parse_dataset(j.at("dataset"));
  if (j.contains("zoo")) c.zoo = parse_zoo(j.at("zoo"));
  c.budget = get_or<double>(j, "budget", "config", c.budget);
  c.rounds = get_or<int>(j, "rounds", "config", c.rounds);
  c.clients = get_or<int>(j, "clients", "config", c.clients);
  c.n_max = get_or<int>(j, "n_max", "config", c.n_max);
  c.bandwidth_total =
      get_or<double>(j, "bandwidth_total", "config", c.bandwidth_total);
  c.bandwidth_loss =
      get_or<double>(j, "bandwidth_loss", "config", c.bandwidth_loss);
  c.eta = parse_rate(j, "eta");
  c.xi = parse_rate(j, "xi");
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& a : get_key<std::vector<std::string>>(j, "algorithms",
                                                           "config")) {
      c.algorithms.push_back(algorithm_from_name(a));
    }
    if (c.algorithms.empty()) {
      throw ConfigError("key 'algorithms': need at least one algorithm");
    }
  }
  if (j.contains("seeds")) {
    c.seeds = get_key<std::vector<std::uint64_t>>(j, "seeds", "config");
    if (c.seeds.empty()) throw ConfigError("key 'seeds': need at least one seed");
  }
  c.output_dir = get_or<std::string>(j, "output_dir", "config",
                                     c.output_dir.string());
  c.pretrain_fraction =
      get_or<double>(j, "pretrain_fraction", "config", c.pretrain_fraction);
  c.oracle = get_or<bool>(j, "oracle", "config", c.oracle);
  c.graph_dump = get_or<bool>(j, "graph_dump", "config", c.graph_dump);
  c.alpha_diagnostic =
      get_or<bool>(j, "alpha_diagnostic", "config", c.alpha_diagnostic);
  c.per_model_estimates =
      get_or<bool>(j, "per_model_estimates", "config", c.per_model_estimates);

  if (c.rounds < 0) throw ConfigError("key 'rounds': must be >= 0");
  if (c.clients < 1) throw ConfigError("key 'clients': must be >= 1");
  if (c.n_max < 1 || c.n_max > c.clients) {
    throw ConfigError("key 'n_max': must be in [1, clients]");
  }
  if (!(c.budget > 0.0)) throw ConfigError("key 'budget': must be positive");
  if (!(c.bandwidth_total > 0.0) || !(c.bandwidth_loss > 0.0)) {
    throw ConfigError("bandwidth_total and bandwidth_loss must be positive");
  }
  if (!(c.pretrain_fraction > 0.0 && c.pretrain_fraction < 1.0)) {
    throw ConfigError("key 'pretrain_fraction': must be in (0,1)");
  }
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dataset"] = dataset_to_json(c.dataset);
  j["zoo"] = zoo_to_json(c.zoo);
  j["budget"] = c.budget;
  j["rounds"] = c.rounds;
  j["clients"] = c.clients;
  j["n_max"] = c.n_max;
  j["bandwidth_total"] = c.bandwidth_total;
  j["bandwidth_loss"] = c.bandwidth_loss;
  j["eta"] = rate_to_json(c.eta);
  j["xi"] = rate_to_json(c.xi);
  nlohmann::json algorithms = nlohmann::json::array();
  for (Algorithm a : c.algorithms) algorithms.push_back(algorithm_name(a));
  j["algorithms"] = std::move(algorithms);
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir.string();
  j["pretrain_fraction"] = c.pretrain_fraction;
  j["oracle"] = c.oracle;
  j["graph_dump"] = c.graph_dump;
  j["alpha_diagnostic"] = c.alpha_diagnostic;
  j["per_model_estimates"] = c.per_model_estimates;
  return j;
}

void validate_config(const ExperimentConfig& config) {
  long dataset_size = 0;
  int feature_count = 0;
  if (config.dataset.kind == DatasetConfig::Kind::kSynthetic) {
    dataset_size = config.dataset.synthetic.sample_count;
    feature_count = config.dataset.synthetic.feature_count;
  } else {
    // Sizing requires the actual file; read it (but write nothing).
    Dataset ds = config.dataset.target_column.empty()
                     ? load_dataset(config.dataset.csv_path,
                                    config.dataset.target_index)
                     : load_dataset(config.dataset.csv_path,
                                    config.dataset.target_column);
    dataset_size = static_cast<long>(ds.samples.size());
    feature_count = ds.feature_count;
  }
  const long pretrain_count =
      std::lround(config.pretrain_fraction * static_cast<double>(dataset_size));
  if (pretrain_count < 1) {
    throw ConfigError("dataset too small for one pretrain sample");
  }
  if (pretrain_count >= dataset_size) {
    throw ConfigError("no samples left for the client stream");
  }

  // The budget must cover every model's cost (costs are derivable from
  // parameter counts without training).
  const ZooConfig zoo = config.zoo.resolve();
  long max_params = 0;
  for (const auto& spec : zoo.specs) {
    max_params = std::max(
        max_params, planned_param_count(spec, feature_count, pretrain_count));
  }
  const Budget budget{config.budget};
  for (std::size_t i = 0; i < zoo.specs.size(); ++i) {
    const long params =
        planned_param_count(zoo.specs[i], feature_count, pretrain_count);
    const double cost =
        static_cast<double>(params) / static_cast<double>(max_params);
    if (!budget.covers(cost)) {
      throw ConfigError(
          "budget " + std::to_string(budget.per_round) +
          " is below the cost " + std::to_string(cost) + " of model " +
          std::to_string(i) + "; every model must fit the per-round budget");
    }
  }

  // A round with a single-model neighborhood must admit at least one client.
  if (config.rounds > 0 &&
      static_cast<long>(config.bandwidth_total /
                        (config.bandwidth_loss * 2.0)) < 1) {
    throw ConfigError(
        "bandwidth_total cannot accommodate one client reporting two losses");
  }
  if (config.rounds > 0) {
    const double xi = config.resolve_xi(
        static_cast<int>(zoo.specs.size()));
    if (!(xi >= 0.0 && xi < 1.0)) {
      throw ConfigError("resolved xi = " + std::to_string(xi) +
                        " is outside [0,1); pick a larger T or explicit xi");
    }
  }
}

}  // namespace eflfg
