#pragma once

#include <cstdint>

#include "knng/counters.hpp"
#include "knng/graph.hpp"

namespace knng {

// What every builder and refiner hands back: the graph, the cost counters
// of this stage, an estimate of peak auxiliary memory (everything beyond
// the dataset and the output graph) and the stage wall time.
struct BuildResult {
    KnnGraph graph;
    Counters counters;
    std::uint64_t aux_bytes = 0;
    double wall_seconds = 0.0;
};

}  // namespace knng
