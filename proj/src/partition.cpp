#include "knng/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <omp.h>

#include "knng/errors.hpp"
#include "knng/neighbor.hpp"

namespace knng {

namespace {

constexpr std::uint64_t kDivStream = 0x6d646976ull;
constexpr std::uint64_t kLshStream = 0x6c736800ull;
constexpr std::uint64_t kTreeStream = 0x72707472ull;

std::vector<float> random_unit(Rng& rng, std::uint32_t d) {
    std::vector<float> v(d);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (float& x : v) {
            x = static_cast<float>(rng.gaussian());
            norm2 += static_cast<double>(x) * x;
        }
    } while (norm2 == 0.0);
    float inv = static_cast<float>(1.0 / std::sqrt(norm2));
    for (float& x : v) x *= inv;
    return v;
}

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

// All-pairs within one group, each pair evaluated once and fed to both
// endpoints. Pools may be shared across groups, hence the locks.
void brute_force_group(const Dataset& data, std::span<const std::uint32_t> ids,
                       std::vector<NeighborPool>& pools, std::vector<Spinlock>& locks,
                       Counters& counters) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            const std::uint32_t a = ids[i], b = ids[j];
            float d = data.dist2(a, b, counters);
            {
                Spinlock::Guard g(locks[a]);
                pools[a].update(b, d);
            }
            {
                Spinlock::Guard g(locks[b]);
                pools[b].update(a, d);
            }
        }
    }
}

void brute_force_all_groups(const Dataset& data,
                            const std::vector<std::vector<std::uint32_t>>& groups,
                            std::vector<NeighborPool>& pools, std::vector<Spinlock>& locks,
                            Counters& counters, int threads) {
    std::vector<Counters> local(std::max(threads, 1));
#pragma omp parallel num_threads(std::max(threads, 1)) if (threads > 1)
    {
        Counters& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(dynamic, 1)
        for (std::int64_t g = 0; g < static_cast<std::int64_t>(groups.size()); ++g)
            brute_force_group(data, groups[static_cast<std::size_t>(g)], pools, locks, mine);
    }
    for (const Counters& c : local) counters.merge(c);
}

}  // namespace

std::vector<float> principal_direction(const Dataset& data,
                                       std::span<const std::uint32_t> ids, Rng& rng,
                                       int power_iters) {
    if (ids.size() < 2) throw ArgumentError("principal_direction needs >= 2 samples");
    const std::uint32_t d = data.dim();
    std::vector<double> mean(d, 0.0);
    for (std::uint32_t id : ids) {
        auto r = data.row(id);
        for (std::uint32_t j = 0; j < d; ++j) mean[j] += r[j];
    }
    for (double& m : mean) m /= static_cast<double>(ids.size());

    std::vector<float> v = random_unit(rng, d);
    std::vector<double> next(d);
    for (int it = 0; it < power_iters; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::uint32_t id : ids) {
            auto r = data.row(id);
            double proj = 0.0;
            for (std::uint32_t j = 0; j < d; ++j)
                proj += (r[j] - mean[j]) * static_cast<double>(v[j]);
            for (std::uint32_t j = 0; j < d; ++j) next[j] += proj * (r[j] - mean[j]);
        }
        double norm2 = std::inner_product(next.begin(), next.end(), next.begin(), 0.0);
        if (norm2 <= 1e-30) return random_unit(rng, d);  // degenerate sample
        double inv = 1.0 / std::sqrt(norm2);
        for (std::uint32_t j = 0; j < d; ++j) v[j] = static_cast<float>(next[j] * inv);
    }
    return v;
}

std::vector<std::vector<std::uint32_t>> build_division_leaves(const Dataset& data,
                                                              const DivisionParams& params,
                                                              std::uint32_t division) {
    if (params.t_div < 2) throw ArgumentError("t_div must be >= 2");
    if (params.l_div < 1) throw ArgumentError("l_div must be >= 1");
    Rng rng = Rng::derive(params.seed, kDivStream ^ division);

    std::vector<std::uint32_t> all(data.size());
    std::iota(all.begin(), all.end(), 0u);

    std::vector<std::vector<std::uint32_t>> leaves;
    std::vector<std::vector<std::uint32_t>> stack;
    stack.push_back(std::move(all));
    std::vector<float> proj;
    while (!stack.empty()) {
        std::vector<std::uint32_t> group = std::move(stack.back());
        stack.pop_back();
        if (group.size() <= params.t_div) {
            leaves.push_back(std::move(group));
            continue;
        }
        std::uint32_t sample_n =
            std::min<std::uint32_t>(params.sample_size, static_cast<std::uint32_t>(group.size()));
        std::vector<std::uint32_t> sample;
        if (sample_n == group.size()) {
            sample = group;
        } else {
            sample.reserve(sample_n);
            for (std::uint32_t i : rng.sample_distinct(static_cast<std::uint32_t>(group.size()),
                                                       sample_n, kInvalidId))
                sample.push_back(group[i]);
        }
        std::vector<float> dir = principal_direction(data, sample, rng, params.power_iters);

        proj.resize(group.size());
        for (std::size_t i = 0; i < group.size(); ++i)
            proj[i] = static_cast<float>(dot(data.row(group[i]), dir));
        std::vector<std::uint32_t> order(group.size());
        std::iota(order.begin(), order.end(), 0u);
        std::size_t mid = group.size() / 2;
        // Median split on (projection, id): balanced halves even with ties.
        std::nth_element(order.begin(), order.begin() + mid, order.end(),
                         [&](std::uint32_t a, std::uint32_t b) {
                             if (proj[a] != proj[b]) return proj[a] < proj[b];
                             return group[a] < group[b];
                         });
        std::vector<std::uint32_t> left, right;
        left.reserve(mid);
        right.reserve(group.size() - mid);
        for (std::size_t i = 0; i < mid; ++i) left.push_back(group[order[i]]);
        for (std::size_t i = mid; i < group.size(); ++i) right.push_back(group[order[i]]);
        stack.push_back(std::move(left));
        stack.push_back(std::move(right));
    }
    return leaves;
}

BuildResult multiple_division(const Dataset& data, std::uint32_t k,
                              const DivisionParams& params, int threads) {
    if (params.t_div < k + 1) throw ArgumentError("t_div must be >= k+1");
    if (params.l_div < 1) throw ArgumentError("l_div must be >= 1");
    double t0 = omp_get_wtime();
    const std::uint32_t n = data.size();

    BuildResult out;
    std::vector<NeighborPool> pools;
    pools.reserve(n);
    for (std::uint32_t u = 0; u < n; ++u) pools.emplace_back(u, k);
    std::vector<Spinlock> locks(n);

    std::uint64_t peak_division_bytes = 0;
    for (std::uint32_t div = 0; div < params.l_div; ++div) {
        // One division resident at a time.
        auto leaves = build_division_leaves(data, params, div);
        std::uint64_t bytes = 0;
        for (const auto& leaf : leaves) bytes += leaf.size() * sizeof(std::uint32_t);
        peak_division_bytes = std::max(peak_division_bytes, bytes);
        brute_force_all_groups(data, leaves, pools, locks, out.counters, threads);
    }

    out.graph = graph_from_pools(data, k, pools, params.seed, out.counters);
    out.aux_bytes = peak_division_bytes + n * (sizeof(NeighborPool) + sizeof(Spinlock)) +
                    static_cast<std::uint64_t>(n) * k * sizeof(Neighbor);
    out.wall_seconds = omp_get_wtime() - t0;
    return out;
}

std::vector<std::vector<std::uint32_t>> lsh_division_groups(const Dataset& data,
                                                            const LshParams& params,
                                                            std::uint32_t division) {
    if (params.bits < 1) throw ArgumentError("lsh bits must be >= 1");
    if (params.t_hash < 2) throw ArgumentError("t_hash must be >= 2");
    Rng rng = Rng::derive(params.seed, kLshStream ^ division);
    const std::uint32_t n = data.size();
    const std::uint32_t d = data.dim();
    const std::uint32_t b = params.bits;

    // b signed hyperplanes and the score vector in R^b.
    std::vector<std::vector<float>> planes;
    planes.reserve(b);
    for (std::uint32_t j = 0; j < b; ++j) planes.push_back(random_unit(rng, d));
    std::vector<float> score_axis(b);
    for (float& x : score_axis) x = static_cast<float>(rng.gaussian());

    // Each point's {-1,+1}^b code collapses to score = sum of +-axis terms.
    std::vector<float> score(n);
    for (std::uint32_t u = 0; u < n; ++u) {
        auto row = data.row(u);
        double s = 0.0;
        for (std::uint32_t j = 0; j < b; ++j)
            s += dot(row, planes[j]) >= 0.0 ? score_axis[j] : -score_axis[j];
        score[u] = static_cast<float>(s);
    }

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t c) {
        if (score[a] != score[c]) return score[a] < score[c];
        return a < c;
    });

    // Near-equal consecutive groups, each of size <= t_hash.
    std::uint32_t groups_n = (n + params.t_hash - 1) / params.t_hash;
    std::vector<std::vector<std::uint32_t>> groups(groups_n);
    std::uint32_t base = n / groups_n, rem = n % groups_n, at = 0;
    for (std::uint32_t g = 0; g < groups_n; ++g) {
        std::uint32_t sz = base + (g < rem ? 1 : 0);
        groups[g].assign(order.begin() + at, order.begin() + at + sz);
        at += sz;
    }
    return groups;
}

BuildResult lsh_partition_knng(const Dataset& data, std::uint32_t k,
                               const LshParams& params, int threads) {
    if (params.t_hash < k + 1) throw ArgumentError("t_hash must be >= k+1");
    if (params.l_hash < 1) throw ArgumentError("l_hash must be >= 1");
    double t0 = omp_get_wtime();
    const std::uint32_t n = data.size();

    BuildResult out;
    std::vector<NeighborPool> pools;
    pools.reserve(n);
    for (std::uint32_t u = 0; u < n; ++u) pools.emplace_back(u, k);
    std::vector<Spinlock> locks(n);

    for (std::uint32_t div = 0; div < params.l_hash; ++div) {
        auto groups = lsh_division_groups(data, params, div);
        brute_force_all_groups(data, groups, pools, locks, out.counters, threads);
    }

    out.graph = graph_from_pools(data, k, pools, params.seed, out.counters);
    out.aux_bytes = static_cast<std::uint64_t>(n) * (sizeof(float) + sizeof(std::uint32_t)) +
                    static_cast<std::uint64_t>(n) * k * sizeof(Neighbor);
    out.wall_seconds = omp_get_wtime() - t0;
    return out;
}

namespace {

struct RpNode {
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<float> normal;
    float offset = 0.f;
    std::vector<std::uint32_t> leaf_ids;
    bool is_leaf() const { return left < 0; }
};

struct RpTree {
    std::vector<RpNode> nodes;

    const std::vector<std::uint32_t>& find_leaf(std::span<const float> x) const {
        std::int32_t at = 0;
        while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
            const RpNode& nd = nodes[static_cast<std::size_t>(at)];
            at = dot(x, nd.normal) < nd.offset ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(at)].leaf_ids;
    }

    std::uint64_t bytes() const {
        std::uint64_t b = nodes.size() * sizeof(RpNode);
        for (const RpNode& nd : nodes)
            b += nd.normal.size() * sizeof(float) + nd.leaf_ids.size() * sizeof(std::uint32_t);
        return b;
    }
};

// Perpendicular bisector of rows p and q: x on p's side iff
// x.(q-p) < (|q|^2 - |p|^2) / 2.
bool bisector(const Dataset& data, std::uint32_t p, std::uint32_t q,
              std::vector<float>& normal, float& offset) {
    auto rp = data.row(p), rq = data.row(q);
    normal.resize(data.dim());
    double norm2 = 0.0, qq = 0.0, pp = 0.0;
    for (std::uint32_t j = 0; j < data.dim(); ++j) {
        normal[j] = rq[j] - rp[j];
        norm2 += static_cast<double>(normal[j]) * normal[j];
        qq += static_cast<double>(rq[j]) * rq[j];
        pp += static_cast<double>(rp[j]) * rp[j];
    }
    if (norm2 == 0.0) return false;  // identical points
    offset = static_cast<float>(0.5 * (qq - pp));
    return true;
}

std::int32_t build_rp_subtree(const Dataset& data, RpTree& tree,
                              std::vector<std::uint32_t> ids, std::uint32_t leaf_size,
                              Rng& rng) {
    std::int32_t idx = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (ids.size() <= leaf_size) {
        tree.nodes[static_cast<std::size_t>(idx)].leaf_ids = std::move(ids);
        return idx;
    }

    std::vector<float> normal;
    float offset = 0.f;
    std::vector<std::uint32_t> left, right;
    bool split_ok = false;
    for (int attempt = 0; attempt < 8 && !split_ok; ++attempt) {
        std::uint32_t a = rng.index(static_cast<std::uint32_t>(ids.size()));
        std::uint32_t b = rng.index(static_cast<std::uint32_t>(ids.size()));
        if (a == b) continue;
        if (!bisector(data, ids[a], ids[b], normal, offset)) continue;
        left.clear();
        right.clear();
        for (std::uint32_t id : ids)
            (dot(data.row(id), normal) < offset ? left : right).push_back(id);
        split_ok = !left.empty() && !right.empty();
    }
    if (!split_ok) {
        // Degenerate group (duplicates): fall back to a random halving.
        left.assign(ids.begin(), ids.end());
        rng.shuffle(left);
        right.assign(left.begin() + static_cast<std::ptrdiff_t>(left.size() / 2), left.end());
        left.resize(left.size() / 2);
        tree.nodes[static_cast<std::size_t>(idx)].normal.assign(data.dim(), 0.f);
        tree.nodes[static_cast<std::size_t>(idx)].offset = 0.f;
        // Zero normal: descent always takes the right child. Ids stay
        // partitioned; only duplicate-heavy groups ever get here.
        std::int32_t l = build_rp_subtree(data, tree, std::move(left), leaf_size, rng);
        std::int32_t r = build_rp_subtree(data, tree, std::move(right), leaf_size, rng);
        tree.nodes[static_cast<std::size_t>(idx)].left = l;
        tree.nodes[static_cast<std::size_t>(idx)].right = r;
        return idx;
    }
    ids.clear();
    ids.shrink_to_fit();
    tree.nodes[static_cast<std::size_t>(idx)].normal = normal;
    tree.nodes[static_cast<std::size_t>(idx)].offset = offset;
    std::int32_t l = build_rp_subtree(data, tree, std::move(left), leaf_size, rng);
    std::int32_t r = build_rp_subtree(data, tree, std::move(right), leaf_size, rng);
    tree.nodes[static_cast<std::size_t>(idx)].left = l;
    tree.nodes[static_cast<std::size_t>(idx)].right = r;
    return idx;
}

}  // namespace

BuildResult rp_forest_knng(const Dataset& data, std::uint32_t k,
                           const RpForestParams& params, int threads) {
    if (params.l_tree < 1) throw ArgumentError("l_tree must be >= 1");
    if (params.leaf_size < k + 1) throw ArgumentError("leaf_size must be >= k+1");
    double t0 = omp_get_wtime();
    const std::uint32_t n = data.size();
    const std::uint32_t candidate_cap = params.l_tree * k;

    // All trees stay resident: every query walks all of them.
    std::vector<RpTree> forest(params.l_tree);
#pragma omp parallel for num_threads(std::max(threads, 1)) if (threads > 1) \
    schedule(dynamic, 1)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(params.l_tree); ++t) {
        Rng rng = Rng::derive(params.seed, kTreeStream ^ static_cast<std::uint64_t>(t));
        std::vector<std::uint32_t> all(n);
        std::iota(all.begin(), all.end(), 0u);
        build_rp_subtree(data, forest[static_cast<std::size_t>(t)], std::move(all),
                         params.leaf_size, rng);
    }

    BuildResult out;
    std::vector<NeighborPool> pools;
    pools.reserve(n);
    for (std::uint32_t u = 0; u < n; ++u) pools.emplace_back(u, k);

    std::vector<Counters> local(std::max(threads, 1));
#pragma omp parallel num_threads(std::max(threads, 1)) if (threads > 1)
    {
        Counters& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
        VisitedSet seen(n);
#pragma omp for schedule(dynamic, 64)
        for (std::int64_t iu = 0; iu < static_cast<std::int64_t>(n); ++iu) {
            const std::uint32_t u = static_cast<std::uint32_t>(iu);
            seen.begin();
            seen.test_and_set(u);
            std::uint32_t found = 0;
            for (const RpTree& tree : forest) {
                // Whole leaves at a time; stop between trees once the
                // distinct-candidate budget is met.
                for (std::uint32_t c : tree.find_leaf(data.row(u))) {
                    if (seen.test_and_set(c)) continue;
                    pools[u].update(c, data.dist2(u, c, mine));
                    ++found;
                }
                if (found >= candidate_cap) break;
            }
        }
    }
    for (const Counters& c : local) out.counters.merge(c);

    std::uint64_t tree_bytes = 0;
    for (const RpTree& t : forest) tree_bytes += t.bytes();
    out.graph = graph_from_pools(data, k, pools, params.seed, out.counters);
    out.aux_bytes = tree_bytes + static_cast<std::uint64_t>(n) * k * sizeof(Neighbor);
    out.wall_seconds = omp_get_wtime() - t0;
    return out;
}

}  // namespace knng
