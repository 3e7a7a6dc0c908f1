#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "knng/counters.hpp"
#include "knng/dataset.hpp"
#include "knng/errors.hpp"
#include "knng/io.hpp"
#include "knng/neighbor.hpp"
#include "knng/result.hpp"
#include "knng/rng.hpp"

namespace knng {

struct SearchScratch {
    VisitedSet visited;
    std::vector<std::uint32_t> nbrs;
};

// Greedy best-first search over a proximity graph: repeatedly expand the
// first unexpanded pool entry and offer its neighbors, until the first
// `ef` entries are all expanded; the caller reads the first k entries.
//
// neighbors_of(id, out) appends id's adjacency; dist_to(id) computes the
// query-candidate distance and is responsible for counting (and, during
// construction, KNN tracing). With dedup on, each node is offered at most
// once per query; the result is the same either way, dedup only saves
// repeated distance evaluations. Entries equal to `owner` are skipped, so
// a point can search a graph it is already part of. `preseeded` rows enter
// with their stored distances, unevaluated.
template <class NeighborsFn, class DistFn>
NeighborPool search_on_graph(NeighborsFn&& neighbors_of, DistFn&& dist_to,
                             std::span<const std::uint32_t> entries, std::uint32_t k,
                             std::uint32_t ef, std::uint32_t owner, bool dedup,
                             SearchScratch& scratch, Counters& counters,
                             std::span<const Neighbor> preseeded = {}) {
    if (entries.empty() && preseeded.empty())
        throw ArgumentError("search_on_graph: empty entry set");
    NeighborPool pool(owner, std::max(k, ef));
    scratch.visited.begin();
    if (owner != kInvalidId && dedup) scratch.visited.test_and_set(owner);
    for (const Neighbor& e : preseeded) {
        if (dedup) scratch.visited.test_and_set(e.id);
    }
    if (!preseeded.empty()) pool.seed(preseeded);
    for (std::uint32_t ep : entries) {
        if (ep == owner) continue;
        if (dedup && scratch.visited.test_and_set(ep)) continue;
        pool.update(ep, dist_to(ep));
    }

    std::uint32_t expansions = 0;
    const std::uint32_t scan_limit = ef;
    for (;;) {
        auto& es = pool.entries();
        std::size_t i = 0;
        std::size_t limit = std::min<std::size_t>(scan_limit, es.size());
        while (i < limit && es[i].expanded) ++i;
        if (i >= limit) break;
        es[i].expanded = true;
        const std::uint32_t node = es[i].id;
        ++expansions;
        scratch.nbrs.clear();
        neighbors_of(node, scratch.nbrs);
        for (std::uint32_t v : scratch.nbrs) {
            if (v == owner) continue;
            if (dedup && scratch.visited.test_and_set(v)) continue;
            pool.update(v, dist_to(v));
        }
    }
    counters.expand_count += expansions;
    return pool;
}

// Keep candidates (ascending by distance to the owner) that are closer to
// the owner than to every already-kept candidate, up to m of them.
// `between(a, b)` evaluates the candidate-candidate distance.
template <class DistFn>
std::vector<std::uint32_t> select_neighbors_diverse(std::span<const Neighbor> candidates,
                                                    std::uint32_t m, DistFn&& between) {
    std::vector<std::uint32_t> kept;
    kept.reserve(m);
    for (const Neighbor& c : candidates) {
        if (kept.size() >= m) break;
        bool diverse = true;
        for (std::uint32_t s : kept) {
            if (between(c.id, s) <= c.dist) {
                diverse = false;
                break;
            }
        }
        if (diverse) kept.push_back(c.id);
    }
    return kept;
}

// Single-layer navigable small world: undirected links, no degree bound.
struct SwGraph {
    std::vector<std::vector<std::uint32_t>> adj;
    std::uint32_t entry = kInvalidId;

    std::uint32_t max_degree() const;
    std::uint64_t bytes() const;
    LayeredGraphFile to_file() const;
};

// Hierarchical variant: per-node top layer, degree target m per layer with
// the conventional 2m allowance at layer 0.
struct HnswGraph {
    std::uint32_t m = 20;
    double ml = 0.0;  // level normalizer, 1/ln(m)
    int top_layer = 0;
    std::uint32_t entry = kInvalidId;
    std::vector<int> levels;
    std::vector<std::vector<std::vector<std::uint32_t>>> adj;  // [node][layer]

    std::uint32_t cap(int layer) const { return layer == 0 ? 2 * m : m; }
    std::uint64_t bytes() const;
    LayeredGraphFile to_file() const;
};

// Geometric layer law: floor(-ln(U) * ml) with U uniform in (0, 1].
int hnsw_assign_layer(Rng& rng, double ml);

struct SwBuildResult {
    SwGraph graph;
    KnnGraph knng;  // traced from every distance evaluated during construction
    Counters counters;
    std::uint64_t aux_bytes = 0;
    double wall_seconds = 0.0;
};

struct HnswBuildResult {
    HnswGraph graph;
    KnnGraph knng;
    Counters counters;
    std::uint64_t aux_bytes = 0;
    double wall_seconds = 0.0;
};

// Insert points in a seeded random order; each insertion searches the
// current graph from a random existing node and links symmetrically to the
// best m_sw results. Every distance computed anywhere along the way
// refines the traced KNN pools of both endpoints.
SwBuildResult build_sw_knng(const Dataset& data, std::uint32_t k, std::uint32_t m_sw,
                            std::uint32_t ef_construction, std::uint64_t seed,
                            int threads = 1);

// Standard hierarchical insertion: greedy descent above the node's level,
// ef_construction search per level below, diverse link selection, reciprocal
// pruning of oversize neighborhoods. Traces the KNNG like the SW builder.
HnswBuildResult build_hnsw_knng(const Dataset& data, std::uint32_t k, std::uint32_t m,
                                std::uint32_t ef_construction, std::uint64_t seed,
                                int threads = 1);

}  // namespace knng
