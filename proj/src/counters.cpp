#include "knng/counters.hpp"

#include <algorithm>

namespace knng {

void ExpandHistogram::record(std::uint32_t count) {
    if (buckets.size() <= count) buckets.resize(count + 1, 0);
    ++buckets[count];
    ++queries;
    expansions += count;
}

void ExpandHistogram::merge(const ExpandHistogram& other) {
    if (buckets.size() < other.buckets.size()) buckets.resize(other.buckets.size(), 0);
    for (std::size_t i = 0; i < other.buckets.size(); ++i) buckets[i] += other.buckets[i];
    queries += other.queries;
    expansions += other.expansions;
}

void Counters::merge(const Counters& other) {
    total_dist += other.total_dist;
    expand_count += other.expand_count;
    prune_count += other.prune_count;
    per_query.merge(other.per_query);
}

}  // namespace knng
