#include "knng/dataset.hpp"

#include <cmath>

#include "knng/errors.hpp"

namespace knng {

namespace {
bool g_f64_accum = false;

float accumulate_f32(const float* a, const float* b, std::size_t d) {
    float acc = 0.f;
    for (std::size_t i = 0; i < d; ++i) {
        float diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

float accumulate_f64(const float* a, const float* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += diff * diff;
    }
    return static_cast<float>(acc);
}
}  // namespace

void set_f64_accumulation(bool on) { g_f64_accum = on; }
bool f64_accumulation() { return g_f64_accum; }

Dataset Dataset::from_values(std::uint32_t d, std::vector<float> values) {
    if (d == 0) throw ArgumentError("dataset dimensionality must be >= 1");
    if (values.size() % d != 0) throw ArgumentError("dataset values are not a multiple of d");
    std::size_t n = values.size() / d;
    if (n < 2) throw ArgumentError("dataset must contain at least 2 vectors");
    for (float v : values)
        if (!std::isfinite(v)) throw ArgumentError("dataset contains a non-finite component");
    Dataset ds;
    ds.n_ = static_cast<std::uint32_t>(n);
    ds.d_ = d;
    ds.values_ = std::move(values);
    return ds;
}

float Dataset::dist2(std::uint32_t i, std::uint32_t j) const {
    const float* a = values_.data() + static_cast<std::size_t>(i) * d_;
    const float* b = values_.data() + static_cast<std::size_t>(j) * d_;
    return g_f64_accum ? accumulate_f64(a, b, d_) : accumulate_f32(a, b, d_);
}

float squared_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw ArgumentError("squared_distance: dimension mismatch");
    return g_f64_accum ? accumulate_f64(a.data(), b.data(), a.size())
                       : accumulate_f32(a.data(), b.data(), a.size());
}

float squared_distance(std::span<const float> a, std::span<const float> b, Counters& counters) {
    ++counters.total_dist;
    return squared_distance(a, b);
}

}  // namespace knng
