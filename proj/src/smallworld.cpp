#include "knng/smallworld.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include <omp.h>

#include "knng/errors.hpp"
#include "knng/graph.hpp"

namespace knng {

namespace {

constexpr std::uint64_t kOrderStream = 0x6f726472ull;
constexpr std::uint64_t kInsertStream = 0x696e7372ull;
constexpr std::uint64_t kLevelStream = 0x6c65766cull;

// Feeds every construction-time distance into both endpoints' KNN pools.
class KnnTracer {
public:
    KnnTracer(const Dataset& data, std::uint32_t k) : data_(data), locks_(data.size()) {
        pools_.reserve(data.size());
        for (std::uint32_t u = 0; u < data.size(); ++u) pools_.emplace_back(u, k);
    }

    float dist(std::uint32_t a, std::uint32_t b, Counters& counters) {
        float d = data_.dist2(a, b, counters);
        {
            Spinlock::Guard g(locks_[a]);
            pools_[a].update(b, d);
        }
        {
            Spinlock::Guard g(locks_[b]);
            pools_[b].update(a, d);
        }
        return d;
    }

    std::span<NeighborPool> pools() { return pools_; }
    std::uint64_t bytes() const {
        std::uint64_t b = 0;
        for (const auto& p : pools_) b += p.capacity() * sizeof(Neighbor);
        return b;
    }

private:
    const Dataset& data_;
    std::vector<Spinlock> locks_;
    std::vector<NeighborPool> pools_;
};

std::vector<std::uint32_t> insertion_order(std::uint32_t n, std::uint64_t seed) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng = Rng::derive(seed, kOrderStream);
    rng.shuffle(order);
    return order;
}

}  // namespace

std::uint32_t SwGraph::max_degree() const {
    std::size_t m = 0;
    for (const auto& a : adj) m = std::max(m, a.size());
    return static_cast<std::uint32_t>(m);
}

std::uint64_t SwGraph::bytes() const {
    std::uint64_t b = adj.size() * sizeof(adj[0]);
    for (const auto& a : adj) b += a.size() * sizeof(std::uint32_t);
    return b;
}

LayeredGraphFile SwGraph::to_file() const {
    LayeredGraphFile f;
    f.degree_cap = 0;
    f.entry = entry;
    f.layers.assign(adj.size(), 0);
    f.adjacency.resize(adj.size());
    for (std::size_t u = 0; u < adj.size(); ++u) f.adjacency[u] = {adj[u]};
    return f;
}

std::uint64_t HnswGraph::bytes() const {
    std::uint64_t b = levels.size() * sizeof(int);
    for (const auto& node : adj) {
        b += node.size() * sizeof(node[0]);
        for (const auto& layer : node) b += layer.size() * sizeof(std::uint32_t);
    }
    return b;
}

LayeredGraphFile HnswGraph::to_file() const {
    LayeredGraphFile f;
    f.degree_cap = static_cast<std::int32_t>(m);
    f.entry = entry;
    f.layers.assign(levels.begin(), levels.end());
    f.adjacency = adj;
    return f;
}

int hnsw_assign_layer(Rng& rng, double ml) {
    double u = 1.0 - rng.uniform();  // (0, 1]
    int layer = static_cast<int>(std::floor(-std::log(u) * ml));
    return std::min(layer, 30);
}

SwBuildResult build_sw_knng(const Dataset& data, std::uint32_t k, std::uint32_t m_sw,
                            std::uint32_t ef_construction, std::uint64_t seed,
                            int threads) {
    if (m_sw < 1) throw ArgumentError("m_sw must be >= 1");
    if (ef_construction < 1) throw ArgumentError("ef_construction must be >= 1");
    double t0 = omp_get_wtime();
    const std::uint32_t n = data.size();

    SwBuildResult out;
    out.graph.adj.resize(n);
    std::vector<Spinlock> adj_locks(n);
    KnnTracer tracer(data, std::min(k, n - 1));

    auto order = insertion_order(n, seed);
    out.graph.entry = order[0];

    const int nt = std::max(threads, 1);
    std::vector<Counters> local(nt);
#pragma omp parallel num_threads(nt) if (threads > 1)
    {
        Counters& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
        SearchScratch scratch;
        scratch.visited.reset(n);
#pragma omp for schedule(dynamic, 8)
        for (std::int64_t i = 1; i < static_cast<std::int64_t>(n); ++i) {
            const std::uint32_t u = order[static_cast<std::size_t>(i)];
            Rng rng = Rng::derive(seed, kInsertStream ^ u);
            const std::uint32_t ep =
                order[rng.index(static_cast<std::uint32_t>(i))];  // random existing node

            std::uint64_t expand0 = mine.expand_count;
            std::uint32_t entry_ids[1] = {ep};
            NeighborPool found = search_on_graph(
                [&](std::uint32_t id, std::vector<std::uint32_t>& nbrs) {
                    Spinlock::Guard g(adj_locks[id]);
                    nbrs.insert(nbrs.end(), out.graph.adj[id].begin(), out.graph.adj[id].end());
                },
                [&](std::uint32_t v) { return tracer.dist(u, v, mine); }, entry_ids, m_sw,
                ef_construction, u, /*dedup=*/true, scratch, mine);
            mine.per_query.record(static_cast<std::uint32_t>(mine.expand_count - expand0));

            std::size_t links = std::min<std::size_t>(m_sw, found.size());
            for (std::size_t j = 0; j < links; ++j) {
                std::uint32_t v = found.entries()[j].id;
                {
                    Spinlock::Guard g(adj_locks[u]);
                    out.graph.adj[u].push_back(v);
                }
                {
                    Spinlock::Guard g(adj_locks[v]);
                    out.graph.adj[v].push_back(u);
                }
            }
        }
    }
    for (const Counters& c : local) out.counters.merge(c);

    out.aux_bytes = out.graph.bytes() + tracer.bytes();
    out.knng = graph_from_pools(data, k, tracer.pools(), seed, out.counters);
    out.wall_seconds = omp_get_wtime() - t0;
    return out;
}

HnswBuildResult build_hnsw_knng(const Dataset& data, std::uint32_t k, std::uint32_t m,
                                std::uint32_t ef_construction, std::uint64_t seed,
                                int threads) {
    if (m < 2) throw ArgumentError("m_hnsw must be >= 2");
    if (ef_construction < 1) throw ArgumentError("ef_construction must be >= 1");
    double t0 = omp_get_wtime();
    const std::uint32_t n = data.size();

    HnswBuildResult out;
    HnswGraph& g = out.graph;
    g.m = m;
    g.ml = 1.0 / std::log(static_cast<double>(m));
    g.levels.resize(n);
    g.adj.resize(n);
    for (std::uint32_t u = 0; u < n; ++u) {
        Rng rng = Rng::derive(seed, kLevelStream ^ u);
        g.levels[u] = hnsw_assign_layer(rng, g.ml);
        g.adj[u].resize(static_cast<std::size_t>(g.levels[u]) + 1);
    }

    std::vector<Spinlock> adj_locks(n);
    std::mutex entry_mutex;
    KnnTracer tracer(data, std::min(k, n - 1));

    auto order = insertion_order(n, seed);
    g.entry = order[0];
    g.top_layer = g.levels[order[0]];

    const int nt = std::max(threads, 1);
    std::vector<Counters> local(nt);
#pragma omp parallel num_threads(nt) if (threads > 1)
    {
        Counters& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
        SearchScratch scratch;
        scratch.visited.reset(n);
#pragma omp for schedule(dynamic, 8)
        for (std::int64_t i = 1; i < static_cast<std::int64_t>(n); ++i) {
            const std::uint32_t u = order[static_cast<std::size_t>(i)];
            const int l_u = g.levels[u];

            std::uint32_t ep;
            int top;
            {
                std::lock_guard<std::mutex> lk(entry_mutex);
                ep = g.entry;
                top = g.top_layer;
            }

            auto dist_to_u = [&](std::uint32_t v) { return tracer.dist(u, v, mine); };
            auto between = [&](std::uint32_t a, std::uint32_t b) {
                return tracer.dist(a, b, mine);
            };
            auto layer_neighbors = [&](int layer) {
                return [&, layer](std::uint32_t id, std::vector<std::uint32_t>& nbrs) {
                    Spinlock::Guard lk(adj_locks[id]);
                    if (layer <= g.levels[id]) {
                        const auto& a = g.adj[id][static_cast<std::size_t>(layer)];
                        nbrs.insert(nbrs.end(), a.begin(), a.end());
                    }
                };
            };

            std::uint64_t expand0 = mine.expand_count;

            // Greedy descent above the node's own top layer.
            for (int layer = top; layer > l_u; --layer) {
                std::uint32_t entry_ids[1] = {ep};
                NeighborPool best =
                    search_on_graph(layer_neighbors(layer), dist_to_u, entry_ids, 1, 1, u,
                                    /*dedup=*/true, scratch, mine);
                if (!best.entries().empty()) ep = best.entries()[0].id;
            }

            // Link phase from min(l_u, top) down to the ground layer. The
            // nearest node found per layer seeds the next one.
            for (int layer = std::min(l_u, top); layer >= 0; --layer) {
                std::uint32_t entry_ids[1] = {ep};
                NeighborPool found = search_on_graph(layer_neighbors(layer), dist_to_u,
                                                     entry_ids, ef_construction,
                                                     ef_construction, u,
                                                     /*dedup=*/true, scratch, mine);
                // If a's adjacency exceeds the layer cap, re-select it by the
                // same diversity rule and drop the reciprocal of every edge
                // that fell out, keeping the layer undirected.
                auto prune_oversize = [&](std::uint32_t a) {
                    std::vector<std::uint32_t> dropped;
                    {
                        Spinlock::Guard lk(adj_locks[a]);
                        auto& aa = g.adj[a][static_cast<std::size_t>(layer)];
                        if (aa.size() <= g.cap(layer)) return;
                        std::vector<Neighbor> cands;
                        cands.reserve(aa.size());
                        for (std::uint32_t w : aa)
                            cands.push_back(Neighbor{w, tracer.dist(a, w, mine), false, false});
                        std::sort(cands.begin(), cands.end(),
                                  [](const Neighbor& x, const Neighbor& y) {
                                      return closer(x, y);
                                  });
                        auto kept = select_neighbors_diverse(
                            std::span<const Neighbor>(cands), g.cap(layer), between);
                        for (std::uint32_t w : aa)
                            if (std::find(kept.begin(), kept.end(), w) == kept.end())
                                dropped.push_back(w);
                        aa = std::move(kept);
                        ++mine.prune_count;
                    }
                    for (std::uint32_t w : dropped) {
                        Spinlock::Guard lk(adj_locks[w]);
                        auto& wa = g.adj[w][static_cast<std::size_t>(layer)];
                        auto it = std::find(wa.begin(), wa.end(), a);
                        if (it != wa.end()) wa.erase(it);
                    }
                };
                auto selected = select_neighbors_diverse(
                    std::span<const Neighbor>(found.entries()), m, between);
                for (std::uint32_t v : selected) {
                    {
                        Spinlock::Guard lk(adj_locks[u]);
                        g.adj[u][static_cast<std::size_t>(layer)].push_back(v);
                    }
                    {
                        Spinlock::Guard lk(adj_locks[v]);
                        g.adj[v][static_cast<std::size_t>(layer)].push_back(u);
                    }
                }
                prune_oversize(u);
                for (std::uint32_t v : selected) prune_oversize(v);
                if (!found.entries().empty()) ep = found.entries()[0].id;
            }
            mine.per_query.record(static_cast<std::uint32_t>(mine.expand_count - expand0));

            if (l_u > top) {
                std::lock_guard<std::mutex> lk(entry_mutex);
                if (l_u > g.top_layer) {
                    g.top_layer = l_u;
                    g.entry = u;
                }
            }
        }
    }
    for (const Counters& c : local) out.counters.merge(c);

    out.aux_bytes = g.bytes() + tracer.bytes();
    out.knng = graph_from_pools(data, k, tracer.pools(), seed, out.counters);
    out.wall_seconds = omp_get_wtime() - t0;
    return out;
}

}  // namespace knng
