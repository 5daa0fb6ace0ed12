#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace eflfg {

// Every random choice in an experiment is driven by one master seed through
// named substreams ("node-draw", "client-selection", "model-training", ...).
// Reruns with the same seed are bit-identical; distinct names give
// independent streams.
std::mt19937_64 substream(std::uint64_t master_seed, std::string_view name,
                          std::uint64_t index = 0);

// Uniform double in [0,1) with 53 random bits.
double uniform01(std::mt19937_64& rng);

// Uniform integer in [0,n). n must be positive.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

// Standard normal via Box-Muller; consumes exactly two uniforms per call so
// draw counts stay reproducible.
double standard_normal(std::mt19937_64& rng);

// First `take` elements of a seeded Fisher-Yates shuffle of [0,n).
std::vector<int> sample_without_replacement(int take, int n,
                                            std::mt19937_64& rng);

}  // namespace eflfg
