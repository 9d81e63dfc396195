#pragma once

#include "metasum/corpus.hpp"

#include <cstdint>
#include <vector>

namespace metasum::synth {

/// Controls the generated benchmark. Segment i belongs to family i mod models,
/// and model m is meant to be the strong one on family m.
struct SyntheticOptions {
    std::size_t segments = 2000;
    std::size_t models = 3;
    /// rates[m][f]: per-token corruption probability of model m on family f.
    /// Empty means own_rate on the diagonal and other_rate elsewhere.
    std::vector<std::vector<double>> rates;
    double own_rate = 0.1;
    double other_rate = 0.5;
    std::uint64_t seed = 7;
};

/// The rate matrix after defaults are applied; throws a config error when it is
/// malformed or some model's lowest rate is not on its own family.
std::vector<std::vector<double>> effective_rates(const SyntheticOptions& opt);

Dataset generate_synthetic_benchmark(const SyntheticOptions& opt);

/// Family of a generated segment (parsed back from its position in the dataset).
inline std::size_t family_of(std::size_t segment_index, std::size_t models) { return segment_index % models; }

} // namespace metasum::synth
