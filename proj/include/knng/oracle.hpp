#pragma once

#include <cstdint>
#include <vector>

#include "knng/counters.hpp"
#include "knng/dataset.hpp"
#include "knng/graph.hpp"

namespace knng {

// Ground truth: the exact KNNG plus, per node, its exact reverse neighbor
// set. sum over v of reverse[v].size() == n * k.
struct ExactKnng {
    KnnGraph graph;
    std::vector<std::vector<std::uint32_t>> reverse;
};

// Brute force over all pairs, each pair evaluated once and shared by both
// endpoints, so total_dist grows by exactly n(n-1)/2. Rows are the true k
// smallest (dist, id) pairs. Parallel over rows; the result does not depend
// on the thread count.
ExactKnng exact_knng(const Dataset& data, std::uint32_t k, Counters& counters,
                     int threads = 1);

// Serial reference: one full scan for a single query point, n-1 distance
// evaluations. Backs the sampled-query oracle and the kernel benchmarks.
std::vector<Neighbor> exact_row_scan(const Dataset& data, std::uint32_t query,
                                     std::uint32_t k, Counters& counters);

// Mean over nodes of |exact row intersect graph row| / k.
double recall(const KnnGraph& g, const ExactKnng& exact);

// Same but rows come from a subset of query ids (the sampled oracle path).
double recall_against_rows(const KnnGraph& g,
                           const std::vector<std::uint32_t>& queries,
                           const std::vector<std::vector<Neighbor>>& exact_rows);

struct ReverseRecallResult {
    std::vector<float> per_node;  // NaN where |R*_k(v)| = 0
    double mean = 0.0;            // over defined nodes only
    std::uint32_t defined_nodes = 0;
    std::uint32_t excluded_nodes = 0;  // zero-hub nodes, reported separately
};

ReverseRecallResult reverse_recall(const KnnGraph& g, const ExactKnng& exact);

// total_dist / (n(n-1)/2); may exceed 1 for wasteful pipelines.
double scan_rate(const Counters& counters, std::uint64_t n);
double scan_rate(std::uint64_t total_dist, std::uint64_t n);

}  // namespace knng
