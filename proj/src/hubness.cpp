#include "knng/hubness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "knng/errors.hpp"

namespace knng {

HubnessProfile node_hubness(const ExactKnng& exact) {
    HubnessProfile p;
    p.n = exact.graph.size();
    p.k = exact.graph.k();
    p.h.resize(p.n);
    for (std::uint32_t v = 0; v < p.n; ++v)
        p.h[v] = static_cast<std::uint32_t>(exact.reverse[v].size());
    p.order.resize(p.n);
    std::iota(p.order.begin(), p.order.end(), 0u);
    std::sort(p.order.begin(), p.order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (p.h[a] != p.h[b]) return p.h[a] > p.h[b];
        return a < b;  // deterministic permutation under ties
    });
    p.prefix.resize(p.n + 1);
    p.prefix[0] = 0;
    for (std::uint32_t i = 0; i < p.n; ++i) p.prefix[i + 1] = p.prefix[i] + p.h[p.order[i]];
    return p;
}

double data_hubness(const HubnessProfile& profile, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw ArgumentError("data_hubness requires x in [0,1]");
    std::size_t take = static_cast<std::size_t>(std::ceil(x * profile.n));
    take = std::min<std::size_t>(take, profile.n);
    return static_cast<double>(profile.prefix[take]) /
           (static_cast<double>(profile.n) * profile.k);
}

HubClass classify_hubness_value(double h_at_001) {
    if (h_at_001 < 0.1) return HubClass::low;
    if (h_at_001 > 0.2) return HubClass::high;
    return HubClass::moderate;
}

HubClass classify_hubness(const HubnessProfile& profile) {
    return classify_hubness_value(data_hubness(profile, 0.01));
}

std::string to_string(HubClass c) {
    switch (c) {
        case HubClass::low: return "low";
        case HubClass::moderate: return "moderate";
        case HubClass::high: return "high";
    }
    return "?";
}

std::vector<HubnessBucket> bucketed_accuracy(const KnnGraph& g, const ExactKnng& exact,
                                             const HubnessProfile& profile,
                                             std::span<const std::uint32_t> edges) {
    if (edges.size() < 2) throw ArgumentError("bucketed_accuracy needs >= 2 edges");
    if (g.size() != exact.graph.size() || g.k() != exact.graph.k())
        throw ArgumentError("bucketed_accuracy: graph shapes differ");
    ReverseRecallResult rr = reverse_recall(g, exact);

    std::vector<HubnessBucket> buckets(edges.size() - 1);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        buckets[b].lo = edges[b];
        buckets[b].hi = edges[b + 1];
    }
    for (std::uint32_t u = 0; u < g.size(); ++u) {
        const std::uint32_t h = profile.h[u];
        for (HubnessBucket& bucket : buckets) {
            if (h < bucket.lo || h >= bucket.hi) continue;
            bucket.empty = false;
            ++bucket.count;
            std::uint32_t hits = 0;
            auto exact_row = exact.graph.row(u);
            for (const Neighbor& x : g.row(u))
                for (const Neighbor& y : exact_row)
                    if (x.id == y.id) {
                        ++hits;
                        break;
                    }
            bucket.mean_recall += static_cast<double>(hits) / g.k();
            if (!std::isnan(rr.per_node[u])) {
                ++bucket.rr_defined;
                bucket.mean_recall_r += rr.per_node[u];
            }
            break;
        }
    }
    for (HubnessBucket& bucket : buckets) {
        if (bucket.count) bucket.mean_recall /= bucket.count;
        if (bucket.rr_defined) bucket.mean_recall_r /= bucket.rr_defined;
    }
    return buckets;
}

std::string hubness_curve_csv(const HubnessProfile& profile, std::span<const double> xs) {
    std::ostringstream out;
    out << "x,H\n";
    out.precision(12);
    for (double x : xs) out << x << "," << data_hubness(profile, x) << "\n";
    return out.str();
}

std::string buckets_csv(std::span<const HubnessBucket> buckets) {
    std::ostringstream out;
    out << "h_lo,h_hi,bucket_n,recall,recall_R,recall_R_defined\n";
    out.precision(12);
    for (const HubnessBucket& b : buckets) {
        if (b.empty) continue;
        out << b.lo << "," << b.hi << "," << b.count << "," << b.mean_recall << ","
            << b.mean_recall_r << "," << b.rr_defined << "\n";
    }
    return out.str();
}

}  // namespace knng
