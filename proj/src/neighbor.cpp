#include <algorithm>
#include <cmath>

#include "knng/errors.hpp"
#include "knng/graph.hpp"
#include "knng/rng.hpp"

namespace knng {

KnnGraph::KnnGraph(std::uint32_t n, std::uint32_t k) : n_(n) {
    k_ = std::min(k, n > 0 ? n - 1 : 0);
    flat_.resize(static_cast<std::size_t>(n_) * k_);
}

void KnnGraph::set_row(std::uint32_t u, std::span<const Neighbor> entries) {
    if (entries.size() != k_) throw ArgumentError("set_row: wrong row length");
    std::copy(entries.begin(), entries.end(), flat_.begin() + static_cast<std::size_t>(u) * k_);
}

bool KnnGraph::same_edges(const KnnGraph& other) const {
    if (n_ != other.n_ || k_ != other.k_) return false;
    for (std::size_t i = 0; i < flat_.size(); ++i)
        if (flat_[i].id != other.flat_[i].id || flat_[i].dist != other.flat_[i].dist)
            return false;
    return true;
}

void KnnGraph::check(const Dataset& data) const {
    if (n_ != data.size()) throw ArgumentError("graph/dataset size mismatch");
    for (std::uint32_t u = 0; u < n_; ++u) {
        auto r = row(u);
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i].id >= n_) throw ArgumentError("graph: neighbor id out of range");
            if (r[i].id == u) throw ArgumentError("graph: self loop");
            if (i > 0 && !closer(r[i - 1], r[i])) throw ArgumentError("graph: row not ascending");
            float d = data.dist2(u, r[i].id);
            if (d != r[i].dist) throw ArgumentError("graph: stored distance stale");
        }
    }
}

KnnGraph graph_from_pools(const Dataset& data, std::uint32_t k,
                          std::span<NeighborPool> pools, std::uint64_t seed,
                          Counters& counters) {
    KnnGraph g(data.size(), k);
    const std::uint32_t row_len = g.k();
    std::vector<Neighbor> row;
    for (std::uint32_t u = 0; u < data.size(); ++u) {
        NeighborPool& pool = pools[u];
        if (pool.size() < row_len) {
            // Rare: a pathological partition starves a node of candidates.
            Rng rng = Rng::derive(seed, 0x746f7075ull ^ u);
            std::uint32_t attempts = 0;
            while (pool.size() < row_len && attempts < 64 * row_len) {
                std::uint32_t c = rng.index(data.size());
                ++attempts;
                if (c == u || pool.contains(c)) continue;
                pool.update(c, data.dist2(u, c, counters));
            }
            for (std::uint32_t c = 0; pool.size() < row_len && c < data.size(); ++c) {
                if (c == u || pool.contains(c)) continue;
                pool.update(c, data.dist2(u, c, counters));
            }
        }
        row.assign(pool.entries().begin(), pool.entries().begin() + row_len);
        g.set_row(u, row);
    }
    return g;
}

std::vector<std::vector<std::uint32_t>> reverse_sets(const KnnGraph& g) {
    std::vector<std::vector<std::uint32_t>> rev(g.size());
    for (std::uint32_t u = 0; u < g.size(); ++u)
        for (const Neighbor& nb : g.row(u)) rev[nb.id].push_back(u);
    return rev;
}

}  // namespace knng
