#include "knng/synthetic.hpp"

#include "knng/rng.hpp"

namespace knng {

Dataset make_uniform_hypercube(std::uint32_t n, std::uint32_t d, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 0x756e6966ull);
    std::vector<float> values(static_cast<std::size_t>(n) * d);
    for (float& v : values) v = static_cast<float>(rng.uniform());
    return Dataset::from_values(d, std::move(values));
}

Dataset make_gaussian(std::uint32_t n, std::uint32_t d, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 0x67617573ull);
    std::vector<float> values(static_cast<std::size_t>(n) * d);
    for (float& v : values) v = static_cast<float>(rng.gaussian());
    return Dataset::from_values(d, std::move(values));
}

Dataset make_clustered_gaussian(std::uint32_t n, std::uint32_t d, std::uint32_t clusters,
                                std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 0x636c7573ull);
    std::vector<float> centers(static_cast<std::size_t>(clusters) * d);
    for (float& c : centers) c = rng.uniform_float(0.f, 10.f);
    std::vector<float> values(static_cast<std::size_t>(n) * d);
    for (std::uint32_t i = 0; i < n; ++i) {
        const float* center = centers.data() + static_cast<std::size_t>(rng.index(clusters)) * d;
        for (std::uint32_t j = 0; j < d; ++j)
            values[static_cast<std::size_t>(i) * d + j] =
                center[j] + static_cast<float>(rng.gaussian());
    }
    return Dataset::from_values(d, std::move(values));
}

}  // namespace knng
