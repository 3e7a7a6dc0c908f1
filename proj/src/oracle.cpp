#include "knng/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

#include "knng/errors.hpp"
#include "knng/neighbor.hpp"

namespace knng {

ExactKnng exact_knng(const Dataset& data, std::uint32_t k, Counters& counters,
                     int threads) {
    const std::uint32_t n = data.size();
    if (k < 1 || k >= n) throw ArgumentError("exact_knng requires 1 <= k < n");

    std::vector<NeighborPool> pools;
    pools.reserve(n);
    for (std::uint32_t u = 0; u < n; ++u) pools.emplace_back(u, k);
    std::vector<Spinlock> locks(n);
    // Worst kept distance per pool once full; read relaxed outside the lock
    // to skip hopeless candidates (a stale value only delays a skip).
    std::vector<std::atomic<float>> bound(n);
    for (auto& b : bound) b.store(std::numeric_limits<float>::infinity(), std::memory_order_relaxed);

    std::uint64_t dist_done = 0;
#pragma omp parallel num_threads(std::max(threads, 1)) if (threads > 1) \
    reduction(+ : dist_done)
    {
#pragma omp for schedule(dynamic, 16)
        for (std::int64_t iu = 0; iu < static_cast<std::int64_t>(n); ++iu) {
            const std::uint32_t u = static_cast<std::uint32_t>(iu);
            for (std::uint32_t v = u + 1; v < n; ++v) {
                float d = data.dist2(u, v);
                ++dist_done;
                if (d <= bound[u].load(std::memory_order_relaxed)) {
                    Spinlock::Guard guard(locks[u]);
                    if (pools[u].update(v, d) && pools[u].full())
                        bound[u].store(pools[u].entries().back().dist,
                                       std::memory_order_relaxed);
                }
                if (d <= bound[v].load(std::memory_order_relaxed)) {
                    Spinlock::Guard guard(locks[v]);
                    if (pools[v].update(u, d) && pools[v].full())
                        bound[v].store(pools[v].entries().back().dist,
                                       std::memory_order_relaxed);
                }
            }
        }
    }
    counters.total_dist += dist_done;

    ExactKnng out;
    out.graph = KnnGraph(n, k);
    for (std::uint32_t u = 0; u < n; ++u)
        out.graph.set_row(u, pools[u].entries());
    out.reverse = reverse_sets(out.graph);
    return out;
}

std::vector<Neighbor> exact_row_scan(const Dataset& data, std::uint32_t query,
                                     std::uint32_t k, Counters& counters) {
    const std::uint32_t n = data.size();
    if (k < 1 || k >= n) throw ArgumentError("exact_row_scan requires 1 <= k < n");
    std::vector<Neighbor> all;
    all.reserve(n - 1);
    for (std::uint32_t v = 0; v < n; ++v) {
        if (v == query) continue;
        all.push_back(Neighbor{v, data.dist2(query, v, counters), false, false});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        return closer(a, b);
    });
    all.resize(k);
    return all;
}

namespace {
double row_overlap(std::span<const Neighbor> a, std::span<const Neighbor> b) {
    std::uint32_t hits = 0;
    for (const Neighbor& x : a)
        for (const Neighbor& y : b)
            if (x.id == y.id) {
                ++hits;
                break;
            }
    return hits;
}
}  // namespace

double recall(const KnnGraph& g, const ExactKnng& exact) {
    if (g.size() != exact.graph.size() || g.k() != exact.graph.k())
        throw ArgumentError("recall: graph shapes differ");
    double sum = 0.0;
    for (std::uint32_t u = 0; u < g.size(); ++u)
        sum += row_overlap(exact.graph.row(u), g.row(u)) / g.k();
    return sum / g.size();
}

double recall_against_rows(const KnnGraph& g,
                           const std::vector<std::uint32_t>& queries,
                           const std::vector<std::vector<Neighbor>>& exact_rows) {
    if (queries.empty() || queries.size() != exact_rows.size())
        throw ArgumentError("recall_against_rows: query/row mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (exact_rows[i].size() != g.k())
            throw ArgumentError("recall_against_rows: row length mismatch");
        sum += row_overlap({exact_rows[i].data(), exact_rows[i].size()}, g.row(queries[i])) /
               g.k();
    }
    return sum / static_cast<double>(queries.size());
}

ReverseRecallResult reverse_recall(const KnnGraph& g, const ExactKnng& exact) {
    if (g.size() != exact.graph.size() || g.k() != exact.graph.k())
        throw ArgumentError("reverse_recall: graph shapes differ");
    auto rev = reverse_sets(g);
    ReverseRecallResult out;
    out.per_node.assign(g.size(), std::numeric_limits<float>::quiet_NaN());
    double sum = 0.0;
    for (std::uint32_t v = 0; v < g.size(); ++v) {
        const auto& truth = exact.reverse[v];
        if (truth.empty()) {
            ++out.excluded_nodes;
            continue;
        }
        std::uint32_t hits = 0;
        for (std::uint32_t u : rev[v])
            if (std::binary_search(truth.begin(), truth.end(), u)) ++hits;
        float r = static_cast<float>(hits) / static_cast<float>(truth.size());
        out.per_node[v] = r;
        sum += r;
        ++out.defined_nodes;
    }
    out.mean = out.defined_nodes ? sum / out.defined_nodes : 0.0;
    return out;
}

double scan_rate(std::uint64_t total_dist, std::uint64_t n) {
    if (n < 2) throw ArgumentError("scan_rate requires n >= 2");
    double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return static_cast<double>(total_dist) / pairs;
}

double scan_rate(const Counters& counters, std::uint64_t n) {
    return scan_rate(counters.total_dist, n);
}

}  // namespace knng
