#include "knng/nbpg.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <omp.h>

#include "knng/errors.hpp"
#include "knng/graph.hpp"
#include "knng/rng.hpp"

namespace knng {

namespace {

constexpr std::uint64_t kPoolInitStream = 0x62697030ull;
constexpr std::uint64_t kReverseCapStream = 0x72636170ull;

// prev_kth starts at +inf; the k-th kept distance may never rise between
// checks.
void check_monotonic(const KnnGraph& g, std::vector<float>& prev_kth, std::uint32_t iter) {
    for (std::uint32_t u = 0; u < g.size(); ++u) {
        float kth = g.row(u).back().dist;
        if (kth > prev_kth[u])
            throw std::logic_error("pool-head monotonicity violated at iteration " +
                                   std::to_string(iter));
        prev_kth[u] = kth;
    }
}

std::vector<float> monotonic_state(std::uint32_t n) {
    return std::vector<float>(n, std::numeric_limits<float>::infinity());
}

}  // namespace

BuildResult uniprop(const KnnGraph& g0, const Dataset& data, const UnipropParams& params,
                    int threads, const IterProbe& probe) {
    double t0 = omp_get_wtime();
    const std::uint32_t n = g0.size();
    if (n != data.size()) throw ArgumentError("uniprop: graph/dataset mismatch");
    const std::uint32_t k = g0.k();
    const int nt = std::max(threads, 1);

    BuildResult out;
    KnnGraph cur = g0;
    KnnGraph next(n, k);
    std::vector<float> prev_kth = params.verify_monotonic ? monotonic_state(n)
                                                          : std::vector<float>{};
    if (params.verify_monotonic) check_monotonic(cur, prev_kth, 0);

    for (std::uint32_t t = 1; t <= params.n_iter; ++t) {
        std::vector<Counters> local(nt);
#pragma omp parallel num_threads(nt) if (threads > 1)
        {
            Counters& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
            VisitedSet visited(n);
            std::vector<Neighbor> seedrow(k);
            NeighborPool pool;
#pragma omp for schedule(dynamic, 64)
            for (std::int64_t iu = 0; iu < static_cast<std::int64_t>(n); ++iu) {
                const std::uint32_t u = static_cast<std::uint32_t>(iu);
                auto row = cur.row(u);
                // Carried-over entries are old in iteration t by definition;
                // anything freshly inserted below comes in as new.
                for (std::uint32_t i = 0; i < k; ++i) {
                    seedrow[i] = row[i];
                    seedrow[i].is_old = true;
                    seedrow[i].expanded = false;
                }
                pool = NeighborPool(u, k);
                pool.seed(seedrow);
                visited.begin();
                visited.test_and_set(u);
                for (const Neighbor& ve : row) {
                    for (const Neighbor& we : cur.row(ve.id)) {
                        const std::uint32_t w = we.id;
                        if (w == u) continue;
                        if (params.filters.local && ve.is_old && we.is_old) continue;
                        if (params.filters.global && visited.test_and_set(w)) continue;
                        pool.update(w, data.dist2(u, w, mine));
                    }
                }
                next.set_row(u, pool.entries());
            }
        }
        for (const Counters& c : local) out.counters.merge(c);
        std::swap(cur, next);
        if (params.verify_monotonic) check_monotonic(cur, prev_kth, t);
        if (probe && !probe(t, cur, out.counters)) break;
    }

    out.aux_bytes = next.bytes() + static_cast<std::uint64_t>(nt) * n * sizeof(std::uint32_t);
    out.graph = std::move(cur);
    out.wall_seconds = omp_get_wtime() - t0;
    return out;
}

namespace {

// Shared BiProp machinery. NNDes fixes the window (m = k = L, T = k) and
// joins every candidate pair; the adaptive variant joins up to delta fresh
// entries per node against its candidate set and widens the window only on
// success. Candidate parts: forward/reverse x new/old.
enum class JoinMode {
    all_pairs,               // NNDes, local filter off
    skip_forward_old_pairs,  // NNDes, local filter on
    new_cross_only,          // adaptive: new x (new + old) only
};

struct BipropConfig {
    std::uint32_t k = 0;
    std::uint32_t pool_cap = 0;     // L
    std::uint32_t reverse_cap = 0;  // T
    std::uint32_t delta = 0;        // 0: no per-iteration budget (NNDes)
    std::uint32_t m_fixed = 0;      // 0: adaptive window starting at delta
    std::uint32_t n_iter = 0;
    std::uint64_t seed = 1;
    FilterConfig filters;
    bool verify_monotonic = false;
};

struct PartLists {
    std::vector<std::uint32_t> fwd_new, fwd_old, rev_new, rev_old;
    void clear() {
        fwd_new.clear();
        fwd_old.clear();
        rev_new.clear();
        rev_old.clear();
    }
};

BuildResult biprop_engine(const Dataset& data, const BipropConfig& cfg, int threads,
                          const KnnGraph* warm, const IterProbe& probe) {
    double t0 = omp_get_wtime();
    const std::uint32_t n = data.size();
    const std::uint32_t k = cfg.k;
    if (k < 1 || k >= n) throw ArgumentError("biprop requires 1 <= k < n");
    if (cfg.pool_cap < k) throw ArgumentError("pool capacity must be >= k");
    if (cfg.reverse_cap < 1) throw ArgumentError("reverse cap must be >= 1");
    const std::uint32_t row_len = std::min(k, n - 1);
    const int nt = std::max(threads, 1);

    BuildResult out;
    std::vector<NeighborPool> pools;
    pools.reserve(n);
    for (std::uint32_t u = 0; u < n; ++u) pools.emplace_back(u, cfg.pool_cap);
    std::vector<Spinlock> locks(n);

    if (warm) {
        if (warm->size() != n) throw ArgumentError("warm-start graph/dataset mismatch");
        std::vector<Neighbor> row;
        for (std::uint32_t u = 0; u < n; ++u) {
            auto r = warm->row(u);
            row.assign(r.begin(), r.end());
            for (Neighbor& e : row) {
                e.is_old = false;
                e.expanded = false;
            }
            pools[u].seed(row);
        }
    } else {
        // Random pools: row_len distinct candidates per node, evaluated once.
        std::vector<Counters> local(nt);
#pragma omp parallel num_threads(nt) if (threads > 1)
        {
            Counters& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
            for (std::int64_t iu = 0; iu < static_cast<std::int64_t>(n); ++iu) {
                const std::uint32_t u = static_cast<std::uint32_t>(iu);
                Rng rng = Rng::derive(cfg.seed, kPoolInitStream ^ u);
                for (std::uint32_t c : rng.sample_distinct(n, row_len, u))
                    pools[u].update(c, data.dist2(u, c, mine));
            }
        }
        for (const Counters& c : local) out.counters.merge(c);
    }

    std::vector<std::uint32_t> window(n, cfg.m_fixed ? cfg.m_fixed
                                                     : std::min(cfg.delta, cfg.pool_cap));
    std::vector<PartLists> lists(n);
    std::vector<std::uint8_t> found(n, 0);
    std::vector<float> prev_kth =
        cfg.verify_monotonic ? monotonic_state(n) : std::vector<float>{};

    const JoinMode mode = cfg.m_fixed
                              ? (cfg.filters.local ? JoinMode::skip_forward_old_pairs
                                                   : JoinMode::all_pairs)
                              : JoinMode::new_cross_only;

    for (std::uint32_t t = 1; t <= cfg.n_iter; ++t) {
        // Select this iteration's join parts from the pool state. Entries
        // selected as new are flagged old here; their newness lives on in
        // the part lists.
        for (std::uint32_t u = 0; u < n; ++u) {
            PartLists& pl = lists[u];
            pl.clear();
            auto& es = pools[u].entries();
            const std::size_t w = std::min<std::size_t>(window[u], es.size());
            std::uint32_t fresh = 0;
            for (std::size_t i = 0; i < w; ++i) {
                if (es[i].is_old) {
                    pl.fwd_old.push_back(es[i].id);
                } else if (cfg.delta == 0 || fresh < cfg.delta) {
                    pl.fwd_new.push_back(es[i].id);
                    es[i].is_old = true;
                    ++fresh;
                }
                // Flagged entries beyond the budget stay new for later rounds.
            }
        }
        // Reverse sets from the forward parts, then the cap-by-shuffle.
        for (std::uint32_t u = 0; u < n; ++u) {
            for (std::uint32_t v : lists[u].fwd_new) lists[v].rev_new.push_back(u);
            for (std::uint32_t v : lists[u].fwd_old) lists[v].rev_old.push_back(u);
        }
        for (std::uint32_t u = 0; u < n; ++u) {
            PartLists& pl = lists[u];
            std::size_t total = pl.rev_new.size() + pl.rev_old.size();
            if (total <= cfg.reverse_cap) continue;
            std::vector<std::pair<std::uint32_t, bool>> combined;
            combined.reserve(total);
            for (std::uint32_t v : pl.rev_new) combined.emplace_back(v, true);
            for (std::uint32_t v : pl.rev_old) combined.emplace_back(v, false);
            Rng rng = Rng::derive(cfg.seed,
                                  kReverseCapStream ^ (static_cast<std::uint64_t>(t) << 32) ^ u);
            rng.shuffle(combined);
            combined.resize(cfg.reverse_cap);
            pl.rev_new.clear();
            pl.rev_old.clear();
            for (auto [v, is_new] : combined)
                (is_new ? pl.rev_new : pl.rev_old).push_back(v);
        }

        // Part bits per candidate occurrence. With the global filter on,
        // occurrences of one id merge into a single candidate carrying the
        // union of its part bits, so a pair is joined in exactly the cases
        // the unmerged run would join it at least once.
        constexpr std::uint8_t kNew = 1, kFwdOld = 2, kRevOld = 4;
        auto pair_skipped = [mode](std::uint8_t a, std::uint8_t b) {
            switch (mode) {
                case JoinMode::all_pairs:
                    return false;
                case JoinMode::skip_forward_old_pairs:
                    return a == kFwdOld && b == kFwdOld;
                case JoinMode::new_cross_only:
                    return !(a & kNew) && !(b & kNew);
            }
            return false;
        };

        std::vector<Counters> local(nt);
#pragma omp parallel num_threads(nt) if (threads > 1)
        {
            Counters& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
            VisitedSet seen(n);
            std::vector<std::uint32_t> slot(n, 0);
            std::vector<std::pair<std::uint32_t, std::uint8_t>> cand;  // (id, part bits)
#pragma omp for schedule(dynamic, 32)
            for (std::int64_t iu = 0; iu < static_cast<std::int64_t>(n); ++iu) {
                const std::uint32_t u = static_cast<std::uint32_t>(iu);
                const PartLists& pl = lists[u];
                cand.clear();
                auto add = [&](std::uint32_t v, std::uint8_t bit) {
                    if (cfg.filters.global) {
                        if (seen.test_and_set(v)) {
                            cand[slot[v]].second |= bit;
                            return;
                        }
                        slot[v] = static_cast<std::uint32_t>(cand.size());
                    }
                    cand.emplace_back(v, bit);
                };
                if (cfg.filters.global) seen.begin();
                for (std::uint32_t v : pl.fwd_new) add(v, kNew);
                for (std::uint32_t v : pl.rev_new) add(v, kNew);
                for (std::uint32_t v : pl.fwd_old) add(v, kFwdOld);
                for (std::uint32_t v : pl.rev_old) add(v, kRevOld);

                bool improved = false;
                for (std::size_t i = 0; i < cand.size(); ++i) {
                    for (std::size_t j = i + 1; j < cand.size(); ++j) {
                        const auto [a, a_bits] = cand[i];
                        const auto [b, b_bits] = cand[j];
                        if (a == b || pair_skipped(a_bits, b_bits)) continue;
                        float d = data.dist2(a, b, mine);
                        {
                            Spinlock::Guard g(locks[a]);
                            improved |= pools[a].update(b, d);
                        }
                        {
                            Spinlock::Guard g(locks[b]);
                            improved |= pools[b].update(a, d);
                        }
                    }
                }
                found[u] = improved ? 1 : 0;
            }
        }
        for (const Counters& c : local) out.counters.merge(c);

        if (!cfg.m_fixed) {
            for (std::uint32_t u = 0; u < n; ++u)
                if (found[u])
                    window[u] = std::min(window[u] + cfg.delta, cfg.pool_cap);
        }

        if (cfg.verify_monotonic || probe) {
            KnnGraph snapshot = graph_from_pools(data, k, pools, cfg.seed, out.counters);
            if (cfg.verify_monotonic) check_monotonic(snapshot, prev_kth, t);
            if (probe && !probe(t, snapshot, out.counters)) break;
        }
    }

    std::uint64_t list_bytes = 0;
    for (const PartLists& pl : lists)
        list_bytes += (pl.fwd_new.capacity() + pl.fwd_old.capacity() + pl.rev_new.capacity() +
                       pl.rev_old.capacity()) *
                      sizeof(std::uint32_t);
    std::uint64_t pool_bytes = 0;
    for (const NeighborPool& p : pools) pool_bytes += p.capacity() * sizeof(Neighbor);
    out.aux_bytes = pool_bytes + list_bytes + n * (sizeof(std::uint32_t) + 1);

    out.graph = graph_from_pools(data, k, pools, cfg.seed, out.counters);
    out.wall_seconds = omp_get_wtime() - t0;
    return out;
}

}  // namespace

BuildResult nndes(const Dataset& data, std::uint32_t k, const NndesParams& params, int threads,
                  const IterProbe& probe) {
    if (params.m > k) throw ArgumentError("nndes requires m <= k");
    BipropConfig cfg;
    cfg.k = k;
    cfg.pool_cap = k;      // L = k
    cfg.reverse_cap = k;   // T = k
    cfg.delta = 0;
    cfg.m_fixed = params.m ? params.m : k;
    cfg.n_iter = params.n_iter;
    cfg.seed = params.seed;
    cfg.filters = params.filters;
    cfg.verify_monotonic = params.verify_monotonic;
    return biprop_engine(data, cfg, threads, nullptr, probe);
}

BuildResult kgraph_refine(const Dataset& data, std::uint32_t k, const KgraphParams& params,
                          int threads, const KnnGraph* warm, const IterProbe& probe) {
    if (params.delta < 1) throw ArgumentError("kgraph requires delta >= 1");
    if (params.l < k) throw ArgumentError("kgraph requires L >= k");
    if (params.t < 1) throw ArgumentError("kgraph requires T >= 1");
    BipropConfig cfg;
    cfg.k = k;
    cfg.pool_cap = params.l;
    cfg.reverse_cap = params.t;
    cfg.delta = params.delta;
    cfg.m_fixed = 0;
    cfg.n_iter = params.n_iter;
    cfg.seed = params.seed;
    cfg.filters = params.filters;
    cfg.verify_monotonic = params.verify_monotonic;
    return biprop_engine(data, cfg, threads, warm, probe);
}

namespace {

template <class NeighborsFn>
BuildResult deep_search_impl(const KnnGraph& g0, const Dataset& data, std::uint32_t ef_search,
                             const FilterConfig& filters, int threads, NeighborsFn&& neighbors,
                             std::uint64_t graph_bytes) {
    double t0 = omp_get_wtime();
    const std::uint32_t n = g0.size();
    if (n != data.size()) throw ArgumentError("deep_search: graph/dataset mismatch");
    const std::uint32_t k = g0.k();
    const int nt = std::max(threads, 1);

    BuildResult out;
    out.graph = KnnGraph(n, k);
    std::vector<Counters> local(nt);
#pragma omp parallel num_threads(nt) if (threads > 1)
    {
        Counters& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
        SearchScratch scratch;
        scratch.visited.reset(n);
        std::vector<Neighbor> seedrow(k);
#pragma omp for schedule(dynamic, 64)
        for (std::int64_t iu = 0; iu < static_cast<std::int64_t>(n); ++iu) {
            const std::uint32_t u = static_cast<std::uint32_t>(iu);
            auto row = g0.row(u);
            for (std::uint32_t i = 0; i < k; ++i) {
                seedrow[i] = row[i];
                seedrow[i].expanded = false;
                seedrow[i].is_old = false;
            }
            std::uint64_t expand0 = mine.expand_count;
            NeighborPool pool = search_on_graph(
                neighbors, [&](std::uint32_t v) { return data.dist2(u, v, mine); },
                std::span<const std::uint32_t>{}, k, ef_search, u,
                /*dedup=*/filters.global, scratch, mine,
                std::span<const Neighbor>(seedrow));
            mine.per_query.record(static_cast<std::uint32_t>(mine.expand_count - expand0));
            out.graph.set_row(u, std::span<const Neighbor>(pool.entries().data(), k));
        }
    }
    for (const Counters& c : local) out.counters.merge(c);
    out.aux_bytes = graph_bytes + static_cast<std::uint64_t>(nt) *
                                      (n * sizeof(std::uint32_t) +
                                       std::max(k, ef_search) * sizeof(Neighbor));
    out.wall_seconds = omp_get_wtime() - t0;
    return out;
}

}  // namespace

BuildResult deep_search(const KnnGraph& g0, const KnnGraph& proximity, const Dataset& data,
                        std::uint32_t ef_search, const FilterConfig& filters, int threads) {
    if (proximity.size() != g0.size())
        throw ArgumentError("deep_search: proximity graph/dataset mismatch");
    return deep_search_impl(
        g0, data, ef_search, filters, threads,
        [&proximity](std::uint32_t id, std::vector<std::uint32_t>& nbrs) {
            for (const Neighbor& e : proximity.row(id)) nbrs.push_back(e.id);
        },
        proximity.bytes());
}

BuildResult deep_search(const KnnGraph& g0, const HnswGraph& proximity, const Dataset& data,
                        std::uint32_t ef_search, const FilterConfig& filters, int threads) {
    if (proximity.adj.size() != g0.size())
        throw ArgumentError("deep_search: proximity graph/dataset mismatch");
    return deep_search_impl(
        g0, data, ef_search, filters, threads,
        [&proximity](std::uint32_t id, std::vector<std::uint32_t>& nbrs) {
            const auto& a = proximity.adj[id][0];
            nbrs.insert(nbrs.end(), a.begin(), a.end());
        },
        proximity.bytes());
}

}  // namespace knng
