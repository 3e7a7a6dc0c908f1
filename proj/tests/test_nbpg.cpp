#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "knng/errors.hpp"
#include "knng/nbpg.hpp"
#include "knng/oracle.hpp"
#include "knng/partition.hpp"
#include "knng/pipeline.hpp"
#include "knng/rng.hpp"
#include "knng/synthetic.hpp"
#include "test_support.hpp"

using namespace knng;

namespace {

ExactKnng oracle_of(const Dataset& data, std::uint32_t k) {
    Counters c;
    return exact_knng(data, k, c, 2);
}

KnnGraph random_graph(const Dataset& data, std::uint32_t k, std::uint64_t seed) {
    KnnGraph g(data.size(), k);
    Counters c;
    for (std::uint32_t u = 0; u < data.size(); ++u) {
        Rng rng = Rng::derive(seed, u);
        NeighborPool pool(u, g.k());
        for (std::uint32_t v : rng.sample_distinct(data.size(), g.k(), u))
            pool.update(v, data.dist2(u, v, c));
        g.set_row(u, pool.entries());
    }
    return g;
}

struct FilterCase {
    FilterConfig cfg;
    const char* name;
};

const FilterCase kFilterCases[] = {
    {{true, true}, "global+local"},
    {{true, false}, "global"},
    {{false, true}, "local"},
    {{false, false}, "none"},
};

}  // namespace

TEST_CASE("uniprop: zero iterations leave the graph untouched") {
    Dataset data = make_clustered_gaussian(300, 8, 4, 3);
    KnnGraph g0 = random_graph(data, 8, 5);
    UnipropParams p;
    p.n_iter = 0;
    BuildResult r = uniprop(g0, data, p, 1);
    CHECK(r.graph.same_edges(g0));
    CHECK(r.counters.total_dist == 0);
}

TEST_CASE("uniprop: the exact graph is a fixed point") {
    Dataset data = make_gaussian(200, 8, 7);  // generic: distinct pair distances
    ExactKnng exact = oracle_of(data, 10);
    UnipropParams p;
    p.n_iter = 3;
    p.verify_monotonic = true;
    BuildResult r = uniprop(exact.graph, data, p, 1);
    CHECK(recall(r.graph, exact) == 1.0);
}

TEST_CASE("uniprop: sharp early gains then plateau on a mid-recall init") {
    Dataset data = make_clustered_gaussian(3000, 8, 16, 11);
    const std::uint32_t k = 10;
    ExactKnng exact = oracle_of(data, k);
    RpForestParams rp;
    rp.l_tree = 2;
    rp.leaf_size = 24;
    rp.seed = 13;
    KnnGraph g0 = rp_forest_knng(data, k, rp, 2).graph;

    std::vector<double> recalls = {recall(g0, exact)};
    UnipropParams p;
    p.n_iter = 4;
    uniprop(g0, data, p, 2, [&](std::uint32_t, const KnnGraph& g, const Counters&) {
        recalls.push_back(recall(g, exact));
        return true;
    });
    REQUIRE(recalls.size() == 5);
    for (std::size_t i = 1; i < recalls.size(); ++i) CHECK(recalls[i] >= recalls[i - 1] - 1e-12);
    CHECK(recalls[1] - recalls[0] > 0.1);  // sharp first-iteration rise
    CHECK(recalls[2] - recalls[1] > 0.02);
    CHECK(recalls[4] - recalls[3] < 0.02);  // plateau by the fourth pass
}

TEST_CASE("uniprop filters: byte-identical outputs, fewer distances") {
    Dataset data = make_clustered_gaussian(1200, 8, 8, 17);
    KnnGraph g0 = random_graph(data, 10, 19);
    BuildResult base;
    std::uint64_t base_dist = 0;
    bool first = true;
    std::uint64_t unfiltered_dist = 0, filtered_dist = 0;
    for (const FilterCase& fc : kFilterCases) {
        UnipropParams p;
        p.n_iter = 3;
        p.filters = fc.cfg;
        BuildResult r = uniprop(g0, data, p, 1);
        if (first) {
            base = std::move(r);
            base_dist = base.counters.total_dist;
            first = false;
            filtered_dist = base_dist;
            continue;
        }
        INFO(fc.name);
        CHECK(r.graph.same_edges(base.graph));
        if (!fc.cfg.global && !fc.cfg.local) unfiltered_dist = r.counters.total_dist;
        CHECK((fc.cfg.global || fc.cfg.local ? r.counters.total_dist >= base_dist
                                             : r.counters.total_dist > base_dist));
    }
    CHECK(filtered_dist < unfiltered_dist);  // strict reduction
}

TEST_CASE("nndes: zero iterations give the seeded random graph") {
    const std::uint32_t n = 2000, k = 20;
    Dataset data = make_gaussian(n, 8, 23);
    ExactKnng exact = oracle_of(data, k);
    NndesParams p;
    p.n_iter = 0;
    p.seed = 29;
    BuildResult r = nndes(data, k, p, 1);
    CHECK(r.counters.total_dist == std::uint64_t(n) * k);  // seeding only
    double rec = recall(r.graph, exact);
    CHECK(rec < 0.1);  // ~ k/(n-1)
}

TEST_CASE("nndes: more iterations strictly help on clustered data") {
    Dataset data = make_clustered_gaussian(2000, 8, 12, 31);
    const std::uint32_t k = 10;
    ExactKnng exact = oracle_of(data, k);
    NndesParams p2;
    p2.n_iter = 2;
    p2.seed = 37;
    NndesParams p8;
    p8.n_iter = 8;
    p8.seed = 37;
    p8.verify_monotonic = true;
    double r2 = recall(nndes(data, k, p2, 2).graph, exact);
    double r8 = recall(nndes(data, k, p8, 2).graph, exact);
    CHECK(r8 > r2);
    CHECK(r8 > 0.85);
}

TEST_CASE("nndes filters: byte-identical outputs under all toggles") {
    Dataset data = make_clustered_gaussian(800, 8, 8, 41);
    const std::uint32_t k = 8;
    KnnGraph base;
    std::uint64_t dist_on = 0, dist_off = 0;
    for (const FilterCase& fc : kFilterCases) {
        NndesParams p;
        p.n_iter = 4;
        p.seed = 43;
        p.filters = fc.cfg;
        BuildResult r = nndes(data, k, p, 1);
        INFO(fc.name);
        if (base.size() == 0) base = r.graph;
        else CHECK(r.graph.same_edges(base));
        if (fc.cfg.global && fc.cfg.local) dist_on = r.counters.total_dist;
        if (!fc.cfg.global && !fc.cfg.local) dist_off = r.counters.total_dist;
    }
    CHECK(dist_on < dist_off);
}

TEST_CASE("kgraph: converges to high recall from random pools") {
    Dataset data = make_clustered_gaussian(3000, 8, 16, 47);
    const std::uint32_t k = 10;
    ExactKnng exact = oracle_of(data, k);
    KgraphParams p;
    p.l = 30;
    p.t = 30;
    p.delta = 10;
    p.n_iter = 12;
    p.seed = 53;
    p.verify_monotonic = true;
    BuildResult r = kgraph_refine(data, k, p, 2);
    CHECK(recall(r.graph, exact) > 0.9);
}

TEST_CASE("kgraph filters: identical graphs, global dedup saves work") {
    Dataset data = make_clustered_gaussian(800, 8, 8, 59);
    const std::uint32_t k = 8;
    KnnGraph base;
    std::uint64_t dist_on = 0, dist_off = 0;
    for (const FilterCase& fc : kFilterCases) {
        KgraphParams p;
        p.l = 24;
        p.t = 24;
        p.n_iter = 6;
        p.seed = 61;
        p.filters = fc.cfg;
        BuildResult r = kgraph_refine(data, k, p, 1);
        INFO(fc.name);
        if (base.size() == 0) base = r.graph;
        else CHECK(r.graph.same_edges(base));
        if (fc.cfg.global) dist_on = r.counters.total_dist;
        else dist_off = r.counters.total_dist;
    }
    CHECK(dist_on < dist_off);
}

TEST_CASE("kgraph: reverse cap and small pools still produce full sane rows") {
    Dataset data = make_clustered_gaussian(500, 8, 4, 67);
    KgraphParams p;
    p.l = 12;
    p.t = 2;  // aggressive reverse cap
    p.delta = 3;
    p.n_iter = 5;
    p.seed = 71;
    BuildResult r = kgraph_refine(data, 10, p, 1);
    r.graph.check(data);
    BuildResult again = kgraph_refine(data, 10, p, 1);
    CHECK(r.graph.same_edges(again.graph));
}

TEST_CASE("kgraph warm start accepts an init graph") {
    Dataset data = make_clustered_gaussian(1500, 8, 8, 73);
    const std::uint32_t k = 10;
    ExactKnng exact = oracle_of(data, k);
    KnnGraph g0 = random_graph(data, k, 79);
    KgraphParams p;
    p.l = 30;
    p.t = 30;
    p.n_iter = 8;
    p.seed = 83;
    BuildResult warm = kgraph_refine(data, k, p, 2, &g0);
    CHECK(recall(warm.graph, exact) > 0.85);
}

TEST_CASE("kgraph parameter validation") {
    Dataset data = make_gaussian(100, 4, 1);
    KgraphParams p;
    p.l = 5;
    CHECK_THROWS_AS(kgraph_refine(data, 10, p, 1), ArgumentError);
    KgraphParams p2;
    p2.delta = 0;
    CHECK_THROWS_AS(kgraph_refine(data, 10, p2, 1), ArgumentError);
    NndesParams np;
    np.m = 20;
    CHECK_THROWS_AS(nndes(data, 10, np, 1), ArgumentError);
}

TEST_CASE("deep search: efSearch=0 returns the initial graph") {
    Dataset data = make_clustered_gaussian(400, 8, 4, 89);
    KnnGraph g0 = random_graph(data, 8, 97);
    FilterConfig f;
    BuildResult r = deep_search(g0, g0, data, 0, f, 2);
    CHECK(r.graph.same_edges(g0));
    CHECK(r.counters.total_dist == 0);
}

TEST_CASE("deep search on the complete graph with ef >= n is exact") {
    const std::uint32_t n = 60, k = 6;
    Dataset data = make_gaussian(n, 4, 101);
    ExactKnng exact = oracle_of(data, k);
    // Complete proximity graph expressed as a KNNG with k = n-1.
    Counters c;
    ExactKnng complete = exact_knng(data, n - 1, c, 1);
    KnnGraph g0 = random_graph(data, k, 103);
    FilterConfig f;
    BuildResult r = deep_search(g0, complete.graph, data, n, f, 1);
    CHECK(recall(r.graph, exact) == 1.0);
}

TEST_CASE("deep hnsw: recall grows with efSearch, expansion ratio near 1") {
    Dataset data = make_clustered_gaussian(3000, 8, 16, 107);
    const std::uint32_t k = 10;
    ExactKnng exact = oracle_of(data, k);
    HnswBuildResult h = build_hnsw_knng(data, k, 10, 40, 109, 2);
    FilterConfig f;
    BuildResult low = deep_search(h.knng, h.graph, data, 20, f, 2);
    BuildResult high = deep_search(h.knng, h.graph, data, 160, f, 2);
    double r0 = recall(h.knng, exact);
    double r_low = recall(low.graph, exact);
    double r_high = recall(high.graph, exact);
    CHECK(r_low >= r0 - 1e-12);
    CHECK(r_high >= r_low);

    double ratio_low = low.counters.per_query.mean() / 20.0;
    double ratio_high = high.counters.per_query.mean() / 160.0;
    CHECK(ratio_high < ratio_low);  // ratio approaches 1 from above
    CHECK(ratio_high >= 0.3);
}

TEST_CASE("deep search filters: local is a no-op, global only saves distances") {
    Dataset data = make_clustered_gaussian(600, 8, 6, 113);
    const std::uint32_t k = 8;
    HnswBuildResult h = build_hnsw_knng(data, k, 8, 20, 127, 1);
    KnnGraph base;
    std::uint64_t dist_on = 0, dist_off = 0;
    for (const FilterCase& fc : kFilterCases) {
        BuildResult r = deep_search(h.knng, h.graph, data, 40, fc.cfg, 1);
        INFO(fc.name);
        if (base.size() == 0) base = r.graph;
        else CHECK(r.graph.same_edges(base));
        if (fc.cfg.global) dist_on = r.counters.total_dist;
        else dist_off = r.counters.total_dist;
    }
    CHECK(dist_on < dist_off);
}

TEST_CASE("auxiliary memory stays within 2x of the cost-model formula") {
    // d kept tiny: this exercises allocation accounting, not distances.
    const std::uint32_t n = 100000, k = 20;
    Dataset data = make_uniform_hypercube(n, 4, 131);
    const std::uint64_t entry = sizeof(Neighbor);

    KnnGraph g0 = random_graph(data, k, 137);
    UnipropParams up;
    up.n_iter = 1;
    BuildResult ur = uniprop(g0, data, up, 2);
    CHECK(ur.aux_bytes <= 2 * std::uint64_t(n) * k * entry);

    NndesParams np;
    np.n_iter = 1;
    np.seed = 139;
    BuildResult nr = nndes(data, k, np, 2);
    CHECK(nr.aux_bytes <= 2 * std::uint64_t(n) * k * entry + 2 * std::uint64_t(n) * k * 4);

    KgraphParams kp;
    kp.l = 100;
    kp.t = 100;
    kp.n_iter = 1;
    kp.seed = 149;
    BuildResult kr = kgraph_refine(data, k, kp, 2);
    CHECK(kr.aux_bytes <= 2 * std::uint64_t(n) * kp.l * entry);

    HnswBuildResult h = build_hnsw_knng(data, k, 8, 10, 151, 2);
    FilterConfig f;
    BuildResult dr = deep_search(h.knng, h.graph, data, 20, f, 2);
    CHECK(dr.aux_bytes <= 2 * h.graph.bytes());
}

TEST_CASE("golden: seeded kgraph run on n=10000, scan rate below brute force") {
    Dataset data = make_clustered_gaussian(10000, 16, 32, 4242);
    KgraphParams p;
    p.l = 40;
    p.t = 40;
    p.n_iter = 8;
    p.seed = 4242;
    BuildResult r = kgraph_refine(data, 20, p, 1);
    CHECK(r.counters.total_dist == 20164239);
    CHECK(scan_rate(r.counters, 10000) == 0.40332511251125114);
    CHECK(scan_rate(r.counters, 10000) < 1.0);
}
