#pragma once

#include <cstdint>

#include "knng/dataset.hpp"

namespace knng {

// Seeded generators for the synthetic corpora used by the harness, the
// benchmarks and the acceptance suite.

Dataset make_uniform_hypercube(std::uint32_t n, std::uint32_t d, std::uint64_t seed);

// Isotropic standard normal per component.
Dataset make_gaussian(std::uint32_t n, std::uint32_t d, std::uint64_t seed);

// `clusters` centers drawn uniformly in [0, 10]^d, unit-sigma points around
// a randomly picked center each.
Dataset make_clustered_gaussian(std::uint32_t n, std::uint32_t d, std::uint32_t clusters,
                                std::uint64_t seed);

}  // namespace knng
