#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "knng/errors.hpp"
#include "knng/oracle.hpp"
#include "knng/rng.hpp"
#include "knng/synthetic.hpp"
#include "test_support.hpp"

using namespace knng;

TEST_CASE("1D hand case: ties broken by id") {
    Dataset data = testsupport::line_dataset({0.f, 1.f, 2.f, 10.f});
    Counters c;
    ExactKnng exact = exact_knng(data, 1, c, 1);
    CHECK(exact.graph.row(0)[0].id == 1);
    CHECK(exact.graph.row(1)[0].id == 0);  // tie with node 2, id wins
    CHECK(exact.graph.row(2)[0].id == 1);
    CHECK(exact.graph.row(3)[0].id == 2);
    CHECK(c.total_dist == 6);  // n(n-1)/2
}

TEST_CASE("k = n-1 yields the complete graph") {
    Dataset data = make_gaussian(12, 4, 17);
    Counters c;
    ExactKnng exact = exact_knng(data, 11, c, 1);
    for (std::uint32_t u = 0; u < 12; ++u) {
        auto row = exact.graph.row(u);
        REQUIRE(row.size() == 11);
        std::vector<bool> seen(12, false);
        for (const Neighbor& nb : row) seen[nb.id] = true;
        for (std::uint32_t v = 0; v < 12; ++v) CHECK(seen[v] == (v != u));
    }
}

TEST_CASE("counter conservation: n=100 brute force costs exactly 4950") {
    Dataset data = make_uniform_hypercube(100, 8, 3);
    Counters c;
    exact_knng(data, 10, c, 1);
    CHECK(c.total_dist == 4950);
    CHECK(scan_rate(c, 100) == 1.0);
}

TEST_CASE("parallel exact equals serial exact, pair count included") {
    Dataset data = make_clustered_gaussian(500, 8, 8, 11);
    Counters c1, c2;
    ExactKnng serial = exact_knng(data, 10, c1, 1);
    ExactKnng parallel = exact_knng(data, 10, c2, 4);
    CHECK(serial.graph.same_edges(parallel.graph));
    CHECK(c1.total_dist == c2.total_dist);
    CHECK(c1.total_dist == 500ull * 499 / 2);
}

TEST_CASE("exact agrees with the independent quadratic rescan up to n=500") {
    for (std::uint32_t n : {50u, 200u, 500u}) {
        Dataset data = make_clustered_gaussian(n, 6, 5, n);
        auto naive = testsupport::naive_knn(data, 7);
        Counters c;
        ExactKnng exact = exact_knng(data, 7, c, 2);
        CHECK(testsupport::rows_match(exact.graph, naive));
    }
}

TEST_CASE("exact knng rejects k out of range") {
    Dataset data = make_gaussian(10, 2, 1);
    Counters c;
    CHECK_THROWS_AS(exact_knng(data, 10, c, 1), ArgumentError);
    CHECK_THROWS_AS(exact_knng(data, 0, c, 1), ArgumentError);
}

TEST_CASE("recall: self is 1.0, farthest rows are 0.0") {
    Dataset data = make_gaussian(60, 4, 23);
    Counters c;
    ExactKnng exact = exact_knng(data, 8, c, 1);
    CHECK(recall(exact.graph, exact) == 1.0);

    // Replace every row with the k farthest points (n > 2k keeps them
    // disjoint from the true neighbors).
    KnnGraph worst(60, 8);
    for (std::uint32_t u = 0; u < 60; ++u) {
        std::vector<Neighbor> all;
        Counters cc;
        for (std::uint32_t v = 0; v < 60; ++v)
            if (v != u) all.push_back(Neighbor{v, data.dist2(u, v, cc), false, false});
        std::sort(all.begin(), all.end(),
                  [](const Neighbor& a, const Neighbor& b) { return closer(a, b); });
        std::vector<Neighbor> far(all.end() - 8, all.end());
        std::sort(far.begin(), far.end(),
                  [](const Neighbor& a, const Neighbor& b) { return closer(a, b); });
        worst.set_row(u, far);
    }
    CHECK(recall(worst, exact) == 0.0);
}

TEST_CASE("random graph recall sits near k/(n-1)") {
    const std::uint32_t n = 1000, k = 20;
    Dataset data = make_gaussian(n, 8, 31);
    Counters c;
    ExactKnng exact = exact_knng(data, k, c, 2);
    KnnGraph random_graph(n, k);
    Counters cc;
    for (std::uint32_t u = 0; u < n; ++u) {
        Rng rng = Rng::derive(77, u);
        NeighborPool pool(u, k);
        for (std::uint32_t v : rng.sample_distinct(n, k, u))
            pool.update(v, data.dist2(u, v, cc));
        random_graph.set_row(u, pool.entries());
    }
    double r = recall(random_graph, exact);
    // Expectation k/(n-1) ~ 0.02; 3 sigma of the mean over n*k draws.
    double expect = double(k) / (n - 1);
    double sigma = std::sqrt(expect * (1 - expect) / (double(n) * k));
    CHECK(std::abs(r - expect) < 3 * sigma + 1e-9);
}

TEST_CASE("recall rejects mismatched shapes") {
    Dataset data = make_gaussian(30, 4, 2);
    Counters c;
    ExactKnng e5 = exact_knng(data, 5, c, 1);
    ExactKnng e6 = exact_knng(data, 6, c, 1);
    CHECK_THROWS_AS(recall(e5.graph, e6), ArgumentError);
}

TEST_CASE("reverse recall: exact vs exact is 1 where defined, hand case = 1/2") {
    Dataset data = testsupport::line_dataset({0.f, 1.f, 2.f, 10.f});
    Counters c;
    ExactKnng exact = exact_knng(data, 1, c, 1);
    ReverseRecallResult self_rr = reverse_recall(exact.graph, exact);
    // Node 3 (value 10) has no reverse neighbors: excluded, flagged NaN.
    CHECK(self_rr.excluded_nodes == 1);
    CHECK(std::isnan(self_rr.per_node[3]));
    CHECK(self_rr.mean == 1.0);

    // Same edges except NN(2) = 0: node 1 keeps only one of its two
    // exact reverse neighbors.
    KnnGraph g(4, 1);
    Counters cc;
    auto edge = [&](std::uint32_t u, std::uint32_t v) {
        Neighbor nb{v, data.dist2(u, v, cc), false, false};
        g.set_row(u, std::span<const Neighbor>(&nb, 1));
    };
    edge(0, 1);
    edge(1, 0);
    edge(2, 0);
    edge(3, 2);
    ReverseRecallResult rr = reverse_recall(g, exact);
    CHECK(rr.per_node[1] == 0.5f);
}

TEST_CASE("reverse edge mass: sum |R| = n*k for exact and derived graphs") {
    Dataset data = make_clustered_gaussian(300, 4, 4, 9);
    Counters c;
    ExactKnng exact = exact_knng(data, 6, c, 1);
    std::size_t total = 0;
    for (const auto& r : exact.reverse) total += r.size();
    CHECK(total == 300 * 6);

    auto rev = reverse_sets(exact.graph);
    total = 0;
    for (const auto& r : rev) total += r.size();
    CHECK(total == 300 * 6);
}

TEST_CASE("recall is invariant under row-order shuffles (set semantics)") {
    Dataset data = make_gaussian(200, 4, 13);
    Counters c;
    ExactKnng exact = exact_knng(data, 10, c, 1);
    KnnGraph shuffled = exact.graph;
    Rng rng(5);
    for (std::uint32_t u = 0; u < 200; ++u) {
        auto row = shuffled.row(u);
        std::vector<Neighbor> entries(row.begin(), row.end());
        rng.shuffle(entries);
        for (std::size_t i = 0; i < entries.size(); ++i) row[i] = entries[i];
    }
    CHECK(recall(shuffled, exact) == 1.0);
    ReverseRecallResult rr = reverse_recall(shuffled, exact);
    CHECK(rr.mean == 1.0);
}

TEST_CASE("scan_rate edge cases") {
    Counters zero;
    CHECK(scan_rate(zero, 100) == 0.0);
    CHECK_THROWS_AS(scan_rate(zero, 1), ArgumentError);
    Counters some;
    some.total_dist = 4950 * 2;
    CHECK(scan_rate(some, 100) == 2.0);  // wasteful pipelines may exceed 1
}

TEST_CASE("exact_row_scan matches exact_knng rows") {
    Dataset data = make_clustered_gaussian(150, 8, 4, 21);
    Counters c;
    ExactKnng exact = exact_knng(data, 9, c, 1);
    for (std::uint32_t q : {0u, 17u, 149u}) {
        Counters cc;
        auto row = exact_row_scan(data, q, 9, cc);
        CHECK(cc.total_dist == 149);
        auto expect = exact.graph.row(q);
        REQUIRE(row.size() == expect.size());
        for (std::size_t i = 0; i < row.size(); ++i) CHECK(row[i].id == expect[i].id);
    }
}
