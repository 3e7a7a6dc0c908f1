#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "knng/hubness.hpp"
#include "knng/io.hpp"
#include "knng/nbpg.hpp"
#include "knng/partition.hpp"
#include "knng/smallworld.hpp"

namespace knng {

enum class InitMethod { random, mdiv, lsh, rpforest, sw, hnsw };
enum class NbpgMethod { none, uniprop, nndes, kgraph, deep };

InitMethod init_method_from_string(const std::string& s);
NbpgMethod nbpg_method_from_string(const std::string& s);
std::string to_string(InitMethod m);
std::string to_string(NbpgMethod m);

// One pipeline run: dataset, k, an initial-graph builder, a propagation
// refiner and the shared seed/threading knobs. Defaults follow the common
// operating point (k = 20, HNSW init at m = 20 / ef = 80, 16 threads).
struct PipelineConfig {
    std::string dataset_path;
    DatasetFormat format = DatasetFormat::fvecs;
    std::uint32_t k = 20;
    InitMethod init = InitMethod::hnsw;
    NbpgMethod nbpg = NbpgMethod::none;
    std::uint64_t seed = 1;
    int threads = 16;

    DivisionParams mdiv;
    LshParams lsh;
    RpForestParams rp;
    std::uint32_t sw_m = 0;  // 0 means k
    std::uint32_t sw_ef = 40;
    std::uint32_t hnsw_m = 20;
    std::uint32_t hnsw_ef = 80;

    std::uint32_t uni_iters = 4;
    std::uint32_t nndes_m = 0;  // 0 means k
    std::uint32_t nndes_iters = 8;
    KgraphParams kgraph;
    bool kgraph_warm = false;  // warm-start the refiner from the init graph
    std::uint32_t deep_ef = 160;
    FilterConfig filters;

    std::uint32_t oracle_cap = 50000;
    std::uint32_t estimate_queries = 2000;
    bool allow_estimate = false;
    std::string oracle_cache_dir;  // empty: next to the dataset file

    std::string out_graph;
    std::string out_report;
    std::string out_proximity;  // layered-graph dump for sw/hnsw inits
};

// Plain key-value config file: one `key = value` per line, '#' comments.
PipelineConfig load_config_file(const std::string& path);
void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value);
void validate(const PipelineConfig& cfg);

struct StageStats {
    std::uint64_t total_dist = 0;
    std::uint64_t expand_count = 0;
    std::uint64_t prune_count = 0;
    double expand_per_query = 0.0;
    std::uint64_t aux_bytes = 0;
    double wall_seconds = 0.0;
};

struct RunReport {
    std::string method;
    std::string params_json;  // the method parameters this run used
    std::uint32_t n = 0, d = 0, k = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    double recall = 0.0;
    std::optional<double> recall_r;  // absent under the sampled oracle
    bool recall_estimated = false;
    double scan_rate = 0.0;
    std::uint64_t total_dist = 0;
    StageStats init;
    StageStats nbpg;
    double wall_seconds = 0.0;
    std::uint64_t aux_bytes_peak = 0;
    std::string hubness_class;  // "unknown" under the sampled oracle

    std::string to_json() const;
};

struct PipelineArtifacts {
    KnnGraph graph;
    RunReport report;
};

// INIT then NBPG, metrics against the exact oracle (cached on disk) when
// n <= oracle_cap, else against `estimate_queries` sampled queries -- but
// only when the config opts in; otherwise the cap triggers a refusal.
PipelineArtifacts run_pipeline(const PipelineConfig& cfg);

// Terminal parameter settings per refiner family under which recall stops
// improving appreciably.
struct ConvergedSchedule {
    std::uint32_t uniprop_iters = 4;
    std::uint32_t deep_ef = 160;
    std::uint32_t kgraph_iters = 16;
    std::uint32_t nndes_iters = 16;
};

double converged_recall(PipelineConfig cfg, const ConvergedSchedule& schedule = {});

// One pipeline run per value of `axis` (a config key), shared seed; rows
// sorted by value. An empty value list yields just the header.
std::string sweep_csv(const PipelineConfig& cfg, const std::string& axis,
                      const std::vector<double>& values);

}  // namespace knng
