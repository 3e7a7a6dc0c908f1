#pragma once

#include <cstdint>
#include <functional>

#include "knng/dataset.hpp"
#include "knng/result.hpp"
#include "knng/smallworld.hpp"

namespace knng {

// Repetition filters. Both only skip redundant distance evaluations; under
// a fixed seed and a single thread the output graph is identical with any
// combination, only total_dist changes.
//   global: per-query visited bitmap (candidate-set dedup in BiProp).
//   local:  skip candidate pairs whose both sides are old neighbors.
struct FilterConfig {
    bool global = true;
    bool local = true;
};

// Called after each refinement iteration with the iteration number, the
// current graph and the cumulative stage counters; return false to stop.
using IterProbe = std::function<bool(std::uint32_t, const KnnGraph&, const Counters&)>;

struct UnipropParams {
    std::uint32_t n_iter = 4;
    FilterConfig filters;
    bool verify_monotonic = false;
};

// Iteratively re-rank each node against its neighbors' neighbors; iteration
// t reads only iteration t-1 rows.
BuildResult uniprop(const KnnGraph& g0, const Dataset& data, const UnipropParams& params,
                    int threads = 1, const IterProbe& probe = {});

struct NndesParams {
    std::uint32_t m = 0;  // active-neighbor count, 0 means m = k
    std::uint32_t n_iter = 8;
    std::uint64_t seed = 1;
    FilterConfig filters;
    bool verify_monotonic = false;
};

// Pool size L = k, reverse cap T = k, all-pairs joins over each node's
// neighbors plus reverse neighbors, both directions per pair.
BuildResult nndes(const Dataset& data, std::uint32_t k, const NndesParams& params,
                  int threads = 1, const IterProbe& probe = {});

struct KgraphParams {
    std::uint32_t l = 100;    // pool capacity
    std::uint32_t t = 100;    // reverse-set cap
    std::uint32_t delta = 10; // join-budget increment per iteration
    std::uint32_t n_iter = 16;
    std::uint64_t seed = 1;
    FilterConfig filters;
    bool verify_monotonic = false;
};

// Adaptive-budget variant: each node starts with an active window of delta
// pool entries, joins up to delta not-yet-joined entries per iteration
// against its candidate set, and widens the window by delta only in
// iterations where its joins actually improved some pool. Optional warm
// start from an existing graph.
BuildResult kgraph_refine(const Dataset& data, std::uint32_t k, const KgraphParams& params,
                          int threads = 1, const KnnGraph* warm = nullptr,
                          const IterProbe& probe = {});

// One-pass refinement: re-search every node over the proximity graph,
// seeding the search with the node's current row. The proximity graph is
// either any KNNG (pass g0 itself to deepen the initial graph) or an HNSW
// structure, of which the ground layer is walked.
BuildResult deep_search(const KnnGraph& g0, const KnnGraph& proximity, const Dataset& data,
                        std::uint32_t ef_search, const FilterConfig& filters,
                        int threads = 1);
BuildResult deep_search(const KnnGraph& g0, const HnswGraph& proximity, const Dataset& data,
                        std::uint32_t ef_search, const FilterConfig& filters,
                        int threads = 1);

}  // namespace knng
