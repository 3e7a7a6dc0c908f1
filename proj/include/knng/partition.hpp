#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "knng/dataset.hpp"
#include "knng/result.hpp"
#include "knng/rng.hpp"

namespace knng {

// Recursive principal-direction splits, median each time, brute force in
// the leaves, merged over l_div independent divisions.
struct DivisionParams {
    std::uint32_t t_div = 500;        // max leaf size
    std::uint32_t l_div = 10;         // number of divisions
    std::uint32_t sample_size = 100;  // points sampled for the direction estimate
    int power_iters = 10;
    std::uint64_t seed = 1;
};

// Sign-random-projection codes in {-1,+1}^bits, collapsed to a 1D score on
// a random vector, sorted, and cut into near-equal consecutive groups.
struct LshParams {
    std::uint32_t bits = 32;     // code length b
    std::uint32_t t_hash = 200;  // group size
    std::uint32_t l_hash = 10;   // number of divisions
    std::uint64_t seed = 1;
};

// Random-projection forest: split hyperplane is the perpendicular bisector
// of two sampled points; each query gathers leaf co-members across trees
// until l_tree * k distinct candidates are seen.
struct RpForestParams {
    std::uint32_t l_tree = 50;
    std::uint32_t leaf_size = 32;
    std::uint64_t seed = 1;
};

// Dominant covariance eigendirection of the sampled rows, approximated by a
// fixed number of power iterations on the mean-centered sample; unit norm.
// A degenerate (all-identical) sample yields a seeded random unit vector.
std::vector<float> principal_direction(const Dataset& data,
                                       std::span<const std::uint32_t> ids, Rng& rng,
                                       int power_iters = 10);

// One complete division: every id lands in exactly one leaf (size <= t_div).
std::vector<std::vector<std::uint32_t>> build_division_leaves(const Dataset& data,
                                                              const DivisionParams& params,
                                                              std::uint32_t division);

// One LSH division: every id lands in exactly one group (size <= t_hash).
std::vector<std::vector<std::uint32_t>> lsh_division_groups(const Dataset& data,
                                                            const LshParams& params,
                                                            std::uint32_t division);

BuildResult multiple_division(const Dataset& data, std::uint32_t k,
                              const DivisionParams& params, int threads = 1);

BuildResult lsh_partition_knng(const Dataset& data, std::uint32_t k,
                               const LshParams& params, int threads = 1);

BuildResult rp_forest_knng(const Dataset& data, std::uint32_t k,
                           const RpForestParams& params, int threads = 1);

}  // namespace knng
