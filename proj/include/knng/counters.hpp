#pragma once

#include <cstdint>
#include <vector>

namespace knng {

// Per-query node-expansion tally; bucket i counts queries that expanded
// exactly i nodes.
struct ExpandHistogram {
    std::vector<std::uint64_t> buckets;
    std::uint64_t queries = 0;
    std::uint64_t expansions = 0;

    void record(std::uint32_t count);
    void merge(const ExpandHistogram& other);
    double mean() const {
        return queries ? static_cast<double>(expansions) / static_cast<double>(queries) : 0.0;
    }
};

// Cost instrumentation shared by every builder and refiner. Values are
// monotone non-decreasing during a run; parallel code keeps one instance
// per thread and merges at a barrier.
struct Counters {
    std::uint64_t total_dist = 0;    // distance evaluations
    std::uint64_t expand_count = 0;  // node expansions in graph searches
    std::uint64_t prune_count = 0;   // oversize-adjacency prunes (HNSW)
    ExpandHistogram per_query;

    void merge(const Counters& other);
};

}  // namespace knng
