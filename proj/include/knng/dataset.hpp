#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "knng/counters.hpp"

namespace knng {

// In-memory corpus of n dense d-dimensional float32 vectors, row-addressable
// by id 0..n-1. Immutable after construction and safe to share across threads.
class Dataset {
public:
    Dataset() = default;

    // Takes ownership of row-major values; values.size() must be a multiple
    // of d, with n >= 2, d >= 1 and every component finite.
    static Dataset from_values(std::uint32_t d, std::vector<float> values);

    std::uint32_t size() const { return n_; }
    std::uint32_t dim() const { return d_; }

    std::span<const float> row(std::uint32_t id) const {
        return {values_.data() + static_cast<std::size_t>(id) * d_, d_};
    }

    // Squared Euclidean distance between rows i and j. The counted overload
    // is the one algorithms use; the plain one serves display and file
    // round-trips, which must not perturb run cost accounting.
    float dist2(std::uint32_t i, std::uint32_t j) const;
    float dist2(std::uint32_t i, std::uint32_t j, Counters& counters) const {
        ++counters.total_dist;
        return dist2(i, j);
    }

    const std::vector<float>& values() const { return values_; }

private:
    std::uint32_t n_ = 0;
    std::uint32_t d_ = 0;
    std::vector<float> values_;
};

// Sum of squared component differences; dimension mismatch raises an
// argument error. Squared distance is order-equivalent to the Euclidean
// distance and is used for every comparison in this library.
float squared_distance(std::span<const float> a, std::span<const float> b);
float squared_distance(std::span<const float> a, std::span<const float> b, Counters& counters);

// When enabled, distances accumulate in float64 (result still float32).
// Off by default to match common float32 corpora; flip it to audit the
// precision of the float32 path.
void set_f64_accumulation(bool on);
bool f64_accumulation();

}  // namespace knng
