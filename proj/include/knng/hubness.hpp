#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "knng/oracle.hpp"

namespace knng {

// Per-node reverse-KNN counts h_k(v) plus the descending permutation and
// its prefix sums, which together give the cumulative-hubness curve
// H_k(x) = (sum of the top ceil(x*n) h values) / (n*k).
struct HubnessProfile {
    std::uint32_t n = 0;
    std::uint32_t k = 0;
    std::vector<std::uint32_t> h;       // h_k(v) per node
    std::vector<std::uint32_t> order;   // node ids, descending (h, id asc)
    std::vector<std::uint64_t> prefix;  // prefix[i] = sum of top i h values
};

HubnessProfile node_hubness(const ExactKnng& exact);

// Exact cumulative formula with the ceiling; x outside [0, 1] is an
// argument error. H(0) = 0 and H(1) = 1 by construction.
double data_hubness(const HubnessProfile& profile, double x);

enum class HubClass { low, moderate, high };

// Bucketing of datasets by H_k(0.01): below 0.1 low, above 0.2 high,
// moderate between. Heuristic cutoffs sitting in the gaps of the measured
// groups this classification mirrors.
HubClass classify_hubness(const HubnessProfile& profile);
HubClass classify_hubness_value(double h_at_001);
std::string to_string(HubClass c);

struct HubnessBucket {
    std::uint32_t lo = 0;  // h range [lo, hi)
    std::uint32_t hi = 0;
    std::uint32_t count = 0;       // nodes in bucket
    bool empty = true;             // reported absent, not zero
    double mean_recall = 0.0;      // over bucket members
    std::uint32_t rr_defined = 0;  // members with a defined reverse recall
    double mean_recall_r = 0.0;    // over those members
};

// Group nodes by h_k into [edges[i], edges[i+1]) buckets and average both
// accuracy measures per bucket.
std::vector<HubnessBucket> bucketed_accuracy(const KnnGraph& g, const ExactKnng& exact,
                                             const HubnessProfile& profile,
                                             std::span<const std::uint32_t> edges);

// CSV emission: hubness curve as (x, H) rows, buckets as
// (h_lo, h_hi, bucket_n, recall, recall_R) rows.
std::string hubness_curve_csv(const HubnessProfile& profile, std::span<const double> xs);
std::string buckets_csv(std::span<const HubnessBucket> buckets);

}  // namespace knng
