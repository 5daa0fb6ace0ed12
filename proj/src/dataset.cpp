#include "eflfg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "eflfg/rng.hpp"

namespace eflfg {

namespace {

// Splits one CSV line. Quoted fields may contain commas; embedded newlines
// are not supported (all cells are numeric here anyway).
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  // Allow surrounding spaces, nothing else.
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0') || !std::isfinite(value)) {
    throw ParseError("non-numeric cell at row " + std::to_string(row) +
                     ", column " + std::to_string(col) + ": '" + cell + "'");
  }
  return value;
}

}  // namespace

const DataSample& ClientStream::sample(int round, int client) const {
  const std::size_t slot =
      static_cast<std::size_t>(round - 1) * static_cast<std::size_t>(clients) +
      static_cast<std::size_t>(client);
  return samples[slot % samples.size()];
}

Dataset load_dataset(const std::filesystem::path& path, int target_index) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open dataset file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("empty file (no header row): " + path.string());
  }
  const auto header = split_csv_line(line);
  const std::size_t columns = header.size();
  if (target_index < 0 || static_cast<std::size_t>(target_index) >= columns) {
    throw ParseError("target column index " + std::to_string(target_index) +
                     " out of range for " + std::to_string(columns) +
                     " columns");
  }

  Dataset ds;
  ds.name = path.stem().string();
  ds.feature_count = static_cast<int>(columns) - 1;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != columns) {
      throw ParseError("ragged row " + std::to_string(row) + ": expected " +
                       std::to_string(columns) + " cells, got " +
                       std::to_string(cells.size()));
    }
    DataSample s;
    s.features.reserve(columns - 1);
    for (std::size_t c = 0; c < columns; ++c) {
      const double v = parse_cell(cells[c], row, c + 1);
      if (static_cast<int>(c) == target_index) {
        s.target = v;
      } else {
        s.features.push_back(v);
      }
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) {
    throw ParseError("dataset has a header but no data rows: " +
                     path.string());
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path,
                     const std::string& target_column) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open dataset file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("empty file (no header row): " + path.string());
  }
  const auto header = split_csv_line(line);
  const auto it = std::find(header.begin(), header.end(), target_column);
  if (it == header.end()) {
    throw ParseError("target column '" + target_column +
                     "' not found in header of " + path.string());
  }
  return load_dataset(path, static_cast<int>(it - header.begin()));
}

Dataset normalize_minmax(const Dataset& dataset) {
  if (dataset.samples.empty()) {
    throw ConfigError("normalize_minmax: dataset is empty");
  }
  const int d = dataset.feature_count;
  std::vector<double> lo(d + 1, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d + 1, -std::numeric_limits<double>::infinity());
  for (const auto& s : dataset.samples) {
    for (int j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], s.features[j]);
      hi[j] = std::max(hi[j], s.features[j]);
    }
    lo[d] = std::min(lo[d], s.target);
    hi[d] = std::max(hi[d], s.target);
  }
  auto map = [&](double v, int col) {
    const double range = hi[col] - lo[col];
    if (range <= 0.0) return 0.5;
    return (v - lo[col]) / range;
  };
  Dataset out;
  out.name = dataset.name;
  out.feature_count = d;
  out.samples.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) {
    DataSample t;
    t.features.resize(d);
    for (int j = 0; j < d; ++j) t.features[j] = map(s.features[j], j);
    t.target = map(s.target, d);
    out.samples.push_back(std::move(t));
  }
  return out;
}

std::pair<PretrainSet, ClientStream> partition(const Dataset& dataset,
                                               const SplitPlan& plan) {
  const std::size_t n = dataset.samples.size();
  if (plan.pretrain_fraction <= 0.0 || plan.pretrain_fraction >= 1.0) {
    throw ConfigError("partition: pretrain_fraction must be in (0,1)");
  }
  const long pretrain_count =
      std::lround(plan.pretrain_fraction * static_cast<double>(n));
  if (pretrain_count < 1) {
    throw ConfigError("partition: dataset too small for one pretrain sample (" +
                      std::to_string(n) + " samples, fraction " +
                      std::to_string(plan.pretrain_fraction) + ")");
  }
  if (static_cast<std::size_t>(pretrain_count) >= n) {
    throw ConfigError("partition: no samples left for the client stream");
  }

  auto rng = substream(plan.seed, "split");
  const auto chosen =
      sample_without_replacement(static_cast<int>(pretrain_count),
                                 static_cast<int>(n), rng);
  std::vector<bool> is_pretrain(n, false);
  for (int idx : chosen) is_pretrain[static_cast<std::size_t>(idx)] = true;

  PretrainSet pre;
  pre.feature_count = dataset.feature_count;
  ClientStream stream;
  stream.feature_count = dataset.feature_count;
  stream.clients = plan.clients;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_pretrain[i]) {
      pre.samples.push_back(dataset.samples[i]);
    } else {
      stream.samples.push_back(dataset.samples[i]);
    }
  }
  return {std::move(pre), std::move(stream)};
}

Dataset synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.sample_count <= 0 || spec.feature_count <= 0) {
    throw ConfigError("synthetic_dataset: sample and feature counts must be positive");
  }
  auto rng = substream(seed, "synthetic-data");
  Dataset ds;
  ds.name = spec.name;
  ds.feature_count = spec.feature_count;
  ds.samples.reserve(spec.sample_count);
  const double d = static_cast<double>(spec.feature_count);
  for (int i = 0; i < spec.sample_count; ++i) {
    DataSample s;
    s.features.resize(spec.feature_count);
    double mean = 0.0;
    for (int j = 0; j < spec.feature_count; ++j) {
      s.features[j] = uniform01(rng);
      mean += s.features[j];
    }
    mean /= d;
    double y = 0.0;
    switch (spec.family) {
      case SyntheticSpec::Family::kLinear:
        y = spec.slope * mean;
        break;
      case SyntheticSpec::Family::kSine:
        y = std::sin(2.0 * std::numbers::pi * spec.slope * mean);
        break;
    }
    if (spec.noise > 0.0) y += spec.noise * standard_normal(rng);
    s.target = y;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace eflfg
