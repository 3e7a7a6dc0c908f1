#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "knng/counters.hpp"
#include "knng/dataset.hpp"
#include "knng/neighbor.hpp"

namespace knng {

// n rows of exactly row_len = min(k, n-1) out-neighbors, each row ascending
// by (dist, id), no self loops. The input/output currency of every builder
// and refiner.
class KnnGraph {
public:
    KnnGraph() = default;
    KnnGraph(std::uint32_t n, std::uint32_t k);

    std::uint32_t size() const { return n_; }
    std::uint32_t k() const { return k_; }

    std::span<const Neighbor> row(std::uint32_t u) const {
        return {flat_.data() + static_cast<std::size_t>(u) * k_, k_};
    }
    std::span<Neighbor> row(std::uint32_t u) {
        return {flat_.data() + static_cast<std::size_t>(u) * k_, k_};
    }

    void set_row(std::uint32_t u, std::span<const Neighbor> entries);

    // Ignores the expanded/is_old working flags; equal means same ids and
    // distances in the same order, i.e. identical on disk.
    bool same_edges(const KnnGraph& other) const;

    // Validates row sizes, ordering, self-loop freedom and that stored
    // distances match recomputation; throws ArgumentError on violation.
    void check(const Dataset& data) const;

    std::uint64_t bytes() const { return flat_.size() * sizeof(Neighbor); }

private:
    std::uint32_t n_ = 0;
    std::uint32_t k_ = 0;  // row length, min(requested k, n-1)
    std::vector<Neighbor> flat_;
};

// Assemble a graph from per-node pools; pools holding fewer than min(k, n-1)
// entries are topped up with seeded random distinct candidates so every row
// ends up full (distances counted).
KnnGraph graph_from_pools(const Dataset& data, std::uint32_t k,
                          std::span<NeighborPool> pools, std::uint64_t seed,
                          Counters& counters);

// R_k(v) = { u | v in row(u) }, each list ascending by id.
std::vector<std::vector<std::uint32_t>> reverse_sets(const KnnGraph& g);

}  // namespace knng
