#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "knng/dataset.hpp"
#include "knng/graph.hpp"

namespace knng {

enum class DatasetFormat { fvecs, text };

DatasetFormat dataset_format_from_string(const std::string& s);

// fvecs: per record, little-endian int32 d then d little-endian float32.
// text: one vector per line, whitespace-separated decimals.
// Malformed input raises FormatError carrying the byte offset.
Dataset load_dataset(const std::string& path, DatasetFormat format);

void save_fvecs(const Dataset& data, const std::string& path);

// ivecs: identical layout with int32 components.
std::vector<std::vector<std::int32_t>> load_ivecs(const std::string& path);

// Graph binary: little-endian int32 n, int32 k, then n*k int32 neighbor ids
// row-major. Ids only; distances are recomputed against the dataset on load
// (not counted in run cost).
void save_graph(const KnnGraph& g, const std::string& path);
KnnGraph load_graph(const std::string& path, const Dataset& data);

// Layered proximity graphs (SW, HNSW) persist as the graph binary extended
// with a layer table:
//   int32 n, int32 max_layer, int32 entry, int32 degree_cap (0 = unbounded)
//   int32 layer[n]
//   per node, per level 0..layer[node]: int32 degree, then degree int32 ids
struct LayeredGraphFile {
    std::int32_t degree_cap = 0;
    std::uint32_t entry = 0;
    std::vector<std::int32_t> layers;
    // adjacency[node][level]
    std::vector<std::vector<std::vector<std::uint32_t>>> adjacency;
};

void save_layered_graph(const LayeredGraphFile& g, const std::string& path);
LayeredGraphFile load_layered_graph(const std::string& path);

}  // namespace knng
