#include "knng/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <omp.h>

#include <json.hpp>

#include "knng/errors.hpp"

namespace knng {

namespace fs = std::filesystem;
using nlohmann::json;

InitMethod init_method_from_string(const std::string& s) {
    if (s == "random") return InitMethod::random;
    if (s == "mdiv") return InitMethod::mdiv;
    if (s == "lsh") return InitMethod::lsh;
    if (s == "rpforest") return InitMethod::rpforest;
    if (s == "sw") return InitMethod::sw;
    if (s == "hnsw") return InitMethod::hnsw;
    throw ArgumentError("unknown init method: " + s);
}

NbpgMethod nbpg_method_from_string(const std::string& s) {
    if (s == "none") return NbpgMethod::none;
    if (s == "uniprop") return NbpgMethod::uniprop;
    if (s == "nndes") return NbpgMethod::nndes;
    if (s == "kgraph") return NbpgMethod::kgraph;
    if (s == "deep") return NbpgMethod::deep;
    throw ArgumentError("unknown nbpg method: " + s);
}

std::string to_string(InitMethod m) {
    switch (m) {
        case InitMethod::random: return "random";
        case InitMethod::mdiv: return "mdiv";
        case InitMethod::lsh: return "lsh";
        case InitMethod::rpforest: return "rpforest";
        case InitMethod::sw: return "sw";
        case InitMethod::hnsw: return "hnsw";
    }
    return "?";
}

std::string to_string(NbpgMethod m) {
    switch (m) {
        case NbpgMethod::none: return "none";
        case NbpgMethod::uniprop: return "uniprop";
        case NbpgMethod::nndes: return "nndes";
        case NbpgMethod::kgraph: return "kgraph";
        case NbpgMethod::deep: return "deep";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ArgumentError("bad numeric value for " + key + ": " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw ArgumentError("bad boolean value for " + key + ": " + v);
}

}  // namespace

void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    auto u32 = [&] { return static_cast<std::uint32_t>(parse_u64(key, v)); };
    if (key == "dataset") cfg.dataset_path = v;
    else if (key == "format") cfg.format = dataset_format_from_string(v);
    else if (key == "k") cfg.k = u32();
    else if (key == "seed") cfg.seed = parse_u64(key, v);
    else if (key == "threads") cfg.threads = static_cast<int>(parse_u64(key, v));
    else if (key == "init") cfg.init = init_method_from_string(v);
    else if (key == "nbpg") cfg.nbpg = nbpg_method_from_string(v);
    else if (key == "mdiv.t") cfg.mdiv.t_div = u32();
    else if (key == "mdiv.l") cfg.mdiv.l_div = u32();
    else if (key == "mdiv.sample") cfg.mdiv.sample_size = u32();
    else if (key == "mdiv.power_iters") cfg.mdiv.power_iters = static_cast<int>(parse_u64(key, v));
    else if (key == "lsh.bits") cfg.lsh.bits = u32();
    else if (key == "lsh.t") cfg.lsh.t_hash = u32();
    else if (key == "lsh.l") cfg.lsh.l_hash = u32();
    else if (key == "rp.trees") cfg.rp.l_tree = u32();
    else if (key == "rp.leaf") cfg.rp.leaf_size = u32();
    else if (key == "sw.m") cfg.sw_m = u32();
    else if (key == "sw.ef") cfg.sw_ef = u32();
    else if (key == "hnsw.m") cfg.hnsw_m = u32();
    else if (key == "hnsw.ef") cfg.hnsw_ef = u32();
    else if (key == "uni.iters") cfg.uni_iters = u32();
    else if (key == "nndes.m") cfg.nndes_m = u32();
    else if (key == "nndes.iters") cfg.nndes_iters = u32();
    else if (key == "kgraph.l") cfg.kgraph.l = u32();
    else if (key == "kgraph.t") cfg.kgraph.t = u32();
    else if (key == "kgraph.delta") cfg.kgraph.delta = u32();
    else if (key == "kgraph.iters") cfg.kgraph.n_iter = u32();
    else if (key == "kgraph.warm") cfg.kgraph_warm = parse_bool(key, v);
    else if (key == "deep.ef") cfg.deep_ef = u32();
    else if (key == "filters.global") cfg.filters.global = parse_bool(key, v);
    else if (key == "filters.local") cfg.filters.local = parse_bool(key, v);
    else if (key == "oracle_cap") cfg.oracle_cap = u32();
    else if (key == "estimate") cfg.allow_estimate = parse_bool(key, v);
    else if (key == "estimate_queries") cfg.estimate_queries = u32();
    else if (key == "oracle_cache") cfg.oracle_cache_dir = v;
    else if (key == "out_graph") cfg.out_graph = v;
    else if (key == "out_report") cfg.out_report = v;
    else if (key == "out_proximity") cfg.out_proximity = v;
    else throw ArgumentError("unknown config key: " + key);
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config file " + path);
    PipelineConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("config line without '=': " + line);
        apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void validate(const PipelineConfig& cfg) {
    if (cfg.dataset_path.empty()) throw ArgumentError("no dataset configured");
    if (cfg.k < 1) throw ArgumentError("k must be >= 1");
    if (cfg.threads < 1) throw ArgumentError("threads must be >= 1");
    if (cfg.nbpg == NbpgMethod::nndes && cfg.init != InitMethod::random)
        throw ArgumentError("nndes always starts from random pools; use init=random");
    if (cfg.nbpg == NbpgMethod::kgraph && cfg.kgraph_warm && cfg.init == InitMethod::random)
        throw ArgumentError("kgraph.warm requires a non-random init");
    if (cfg.init == InitMethod::mdiv && cfg.mdiv.t_div < cfg.k + 1)
        throw ArgumentError("mdiv.t must be >= k+1");
    if (cfg.init == InitMethod::lsh && cfg.lsh.t_hash < cfg.k + 1)
        throw ArgumentError("lsh.t must be >= k+1");
    if (cfg.init == InitMethod::rpforest && cfg.rp.leaf_size < cfg.k + 1)
        throw ArgumentError("rp.leaf must be >= k+1");
    if (cfg.nbpg == NbpgMethod::kgraph && cfg.kgraph.l < cfg.k)
        throw ArgumentError("kgraph.l must be >= k");
    if (cfg.nbpg == NbpgMethod::nndes && cfg.nndes_m > cfg.k)
        throw ArgumentError("nndes.m must be <= k");
}

namespace {

// Seeded random rows; the degenerate INIT shared by the BiProp refiners.
BuildResult random_init(const Dataset& data, std::uint32_t k, std::uint64_t seed) {
    double t0 = omp_get_wtime();
    BuildResult out;
    const std::uint32_t row_len = std::min(k, data.size() - 1);
    std::vector<NeighborPool> pools;
    pools.reserve(data.size());
    for (std::uint32_t u = 0; u < data.size(); ++u) pools.emplace_back(u, row_len);
    for (std::uint32_t u = 0; u < data.size(); ++u) {
        Rng rng = Rng::derive(seed, 0x726e6430ull ^ u);
        for (std::uint32_t c : rng.sample_distinct(data.size(), row_len, u))
            pools[u].update(c, data.dist2(u, c, out.counters));
    }
    out.graph = graph_from_pools(data, k, pools, seed, out.counters);
    out.aux_bytes = static_cast<std::uint64_t>(data.size()) * row_len * sizeof(Neighbor);
    out.wall_seconds = omp_get_wtime() - t0;
    return out;
}

StageStats stage_stats(const BuildResult& r) {
    StageStats s;
    s.total_dist = r.counters.total_dist;
    s.expand_count = r.counters.expand_count;
    s.prune_count = r.counters.prune_count;
    s.expand_per_query = r.counters.per_query.mean();
    s.aux_bytes = r.aux_bytes;
    s.wall_seconds = r.wall_seconds;
    return s;
}

fs::path oracle_cache_path(const PipelineConfig& cfg) {
    fs::path dataset(cfg.dataset_path);
    std::string name = dataset.filename().string() + ".oracle.k" + std::to_string(cfg.k);
    if (!cfg.oracle_cache_dir.empty()) return fs::path(cfg.oracle_cache_dir) / name;
    return dataset.parent_path() / name;
}

// On-disk oracle cache: the exact graph in the standard binary format plus
// a sidecar describing the dataset it was computed from.
ExactKnng cached_exact_oracle(const PipelineConfig& cfg, const Dataset& data, int threads) {
    fs::path cache = oracle_cache_path(cfg);
    fs::path meta = cache;
    meta += ".json";
    std::uint64_t dataset_bytes = fs::exists(cfg.dataset_path)
                                      ? static_cast<std::uint64_t>(fs::file_size(cfg.dataset_path))
                                      : 0;
    if (fs::exists(cache) && fs::exists(meta)) {
        try {
            std::ifstream meta_in(meta);
            json m = json::parse(meta_in);
            if (m.value("n", 0u) == data.size() && m.value("d", 0u) == data.dim() &&
                m.value("k", 0u) == cfg.k && m.value("dataset_bytes", 0ull) == dataset_bytes) {
                ExactKnng exact;
                exact.graph = load_graph(cache.string(), data);
                exact.reverse = reverse_sets(exact.graph);
                return exact;
            }
        } catch (const std::exception&) {
            // fall through to recompute
        }
    }
    Counters oracle_counters;
    ExactKnng exact = exact_knng(data, std::min(cfg.k, data.size() - 1), oracle_counters, threads);
    std::error_code ec;
    fs::create_directories(cache.parent_path(), ec);
    save_graph(exact.graph, cache.string());
    json m{{"n", data.size()},
           {"d", data.dim()},
           {"k", cfg.k},
           {"dataset_bytes", dataset_bytes}};
    std::ofstream(meta) << m.dump(2) << "\n";
    return exact;
}

}  // namespace

namespace {

json params_of(const PipelineConfig& cfg) {
    json p{{"k", cfg.k},
           {"seed", cfg.seed},
           {"threads", cfg.threads},
           {"filters", {{"global", cfg.filters.global}, {"local", cfg.filters.local}}}};
    switch (cfg.init) {
        case InitMethod::random:
            break;
        case InitMethod::mdiv:
            p["init"] = {{"t_div", cfg.mdiv.t_div},
                         {"l_div", cfg.mdiv.l_div},
                         {"sample", cfg.mdiv.sample_size}};
            break;
        case InitMethod::lsh:
            p["init"] = {{"bits", cfg.lsh.bits},
                         {"t_hash", cfg.lsh.t_hash},
                         {"l_hash", cfg.lsh.l_hash}};
            break;
        case InitMethod::rpforest:
            p["init"] = {{"l_tree", cfg.rp.l_tree}, {"leaf_size", cfg.rp.leaf_size}};
            break;
        case InitMethod::sw:
            p["init"] = {{"m", cfg.sw_m ? cfg.sw_m : cfg.k}, {"ef_construction", cfg.sw_ef}};
            break;
        case InitMethod::hnsw:
            p["init"] = {{"m", cfg.hnsw_m}, {"ef_construction", cfg.hnsw_ef}};
            break;
    }
    switch (cfg.nbpg) {
        case NbpgMethod::none:
            break;
        case NbpgMethod::uniprop:
            p["nbpg"] = {{"n_iter", cfg.uni_iters}};
            break;
        case NbpgMethod::nndes:
            p["nbpg"] = {{"m", cfg.nndes_m ? cfg.nndes_m : cfg.k},
                         {"n_iter", cfg.nndes_iters}};
            break;
        case NbpgMethod::kgraph:
            p["nbpg"] = {{"l", cfg.kgraph.l},
                         {"t", cfg.kgraph.t},
                         {"delta", cfg.kgraph.delta},
                         {"n_iter", cfg.kgraph.n_iter},
                         {"warm", cfg.kgraph_warm}};
            break;
        case NbpgMethod::deep:
            p["nbpg"] = {{"ef_search", cfg.deep_ef}};
            break;
    }
    return p;
}

}  // namespace

std::string RunReport::to_json() const {
    json j;
    j["method"] = method;
    j["params"] = params_json.empty() ? json::object() : json::parse(params_json);
    j["n"] = n;
    j["d"] = d;
    j["k"] = k;
    j["seed"] = seed;
    j["threads"] = threads;
    j["recall"] = recall;
    if (recall_r) j["recall_R"] = *recall_r;
    else j["recall_R"] = nullptr;
    j["recall_estimated"] = recall_estimated;
    j["scan_rate"] = scan_rate;
    j["total_dist"] = total_dist;
    j["wall_seconds"] = wall_seconds;
    j["aux_bytes_peak"] = aux_bytes_peak;
    j["hubness_class"] = hubness_class;
    auto stage = [](const StageStats& s) {
        return json{{"total_dist", s.total_dist},
                    {"expand_count", s.expand_count},
                    {"prune_count", s.prune_count},
                    {"expand_per_query", s.expand_per_query},
                    {"aux_bytes", s.aux_bytes},
                    {"wall_seconds", s.wall_seconds}};
    };
    j["init"] = stage(init);
    j["nbpg"] = stage(nbpg);
    return j.dump(2);
}

PipelineArtifacts run_pipeline(const PipelineConfig& cfg) {
    validate(cfg);
    double t0 = omp_get_wtime();
    Dataset data = load_dataset(cfg.dataset_path, cfg.format);
    const std::uint32_t n = data.size();
    if (cfg.k >= n) throw ArgumentError("k must be < n");

    const bool estimated = n > cfg.oracle_cap;
    if (estimated && !cfg.allow_estimate)
        throw OracleCapError("dataset exceeds the exact-oracle cap (" +
                             std::to_string(cfg.oracle_cap) +
                             " nodes); pass estimate=true for a sampled-query estimate");

    // INIT stage. BiProp refiners that start from random pools subsume the
    // random init and account for the seeding cost themselves.
    const bool init_subsumed =
        cfg.nbpg == NbpgMethod::nndes ||
        (cfg.nbpg == NbpgMethod::kgraph && !cfg.kgraph_warm && cfg.init == InitMethod::random);
    BuildResult init;
    std::optional<HnswGraph> hnsw;
    std::optional<SwGraph> sw;
    switch (init_subsumed ? InitMethod::random : cfg.init) {
        case InitMethod::random:
            if (!init_subsumed) init = random_init(data, cfg.k, cfg.seed);
            break;
        case InitMethod::mdiv: {
            DivisionParams p = cfg.mdiv;
            p.seed = cfg.seed;
            init = multiple_division(data, cfg.k, p, cfg.threads);
            break;
        }
        case InitMethod::lsh: {
            LshParams p = cfg.lsh;
            p.seed = cfg.seed;
            init = lsh_partition_knng(data, cfg.k, p, cfg.threads);
            break;
        }
        case InitMethod::rpforest: {
            RpForestParams p = cfg.rp;
            p.seed = cfg.seed;
            init = rp_forest_knng(data, cfg.k, p, cfg.threads);
            break;
        }
        case InitMethod::sw: {
            SwBuildResult r = build_sw_knng(data, cfg.k, cfg.sw_m ? cfg.sw_m : cfg.k,
                                            cfg.sw_ef, cfg.seed, cfg.threads);
            init.graph = std::move(r.knng);
            init.counters = r.counters;
            init.aux_bytes = r.aux_bytes;
            init.wall_seconds = r.wall_seconds;
            sw = std::move(r.graph);
            break;
        }
        case InitMethod::hnsw: {
            HnswBuildResult r =
                build_hnsw_knng(data, cfg.k, cfg.hnsw_m, cfg.hnsw_ef, cfg.seed, cfg.threads);
            init.graph = std::move(r.knng);
            init.counters = r.counters;
            init.aux_bytes = r.aux_bytes;
            init.wall_seconds = r.wall_seconds;
            hnsw = std::move(r.graph);
            break;
        }
    }

    // NBPG stage.
    BuildResult refined;
    switch (cfg.nbpg) {
        case NbpgMethod::none:
            refined.graph = std::move(init.graph);
            break;
        case NbpgMethod::uniprop: {
            UnipropParams p;
            p.n_iter = cfg.uni_iters;
            p.filters = cfg.filters;
            refined = uniprop(init.graph, data, p, cfg.threads);
            break;
        }
        case NbpgMethod::nndes: {
            NndesParams p;
            p.m = cfg.nndes_m;
            p.n_iter = cfg.nndes_iters;
            p.seed = cfg.seed;
            p.filters = cfg.filters;
            refined = nndes(data, cfg.k, p, cfg.threads);
            break;
        }
        case NbpgMethod::kgraph: {
            KgraphParams p = cfg.kgraph;
            p.seed = cfg.seed;
            p.filters = cfg.filters;
            const KnnGraph* warm = cfg.kgraph_warm ? &init.graph : nullptr;
            refined = kgraph_refine(data, cfg.k, p, cfg.threads, warm);
            break;
        }
        case NbpgMethod::deep: {
            refined = hnsw ? deep_search(init.graph, *hnsw, data, cfg.deep_ef, cfg.filters,
                                         cfg.threads)
                           : deep_search(init.graph, init.graph, data, cfg.deep_ef,
                                         cfg.filters, cfg.threads);
            break;
        }
    }
    KnnGraph graph = std::move(refined.graph);

    RunReport report;
    report.method = to_string(cfg.init) + "+" + to_string(cfg.nbpg);
    report.params_json = params_of(cfg).dump();
    report.n = n;
    report.d = data.dim();
    report.k = cfg.k;
    report.seed = cfg.seed;
    report.threads = cfg.threads;
    report.init = stage_stats(init);
    report.nbpg = stage_stats(refined);
    report.total_dist = init.counters.total_dist + refined.counters.total_dist;
    report.scan_rate = scan_rate(report.total_dist, n);
    report.aux_bytes_peak = std::max(init.aux_bytes, refined.aux_bytes);
    report.recall_estimated = estimated;
    report.hubness_class = "unknown";

    if (!estimated) {
        ExactKnng exact = cached_exact_oracle(cfg, data, cfg.threads);
        report.recall = recall(graph, exact);
        report.recall_r = reverse_recall(graph, exact).mean;
        report.hubness_class = to_string(classify_hubness(node_hubness(exact)));
    } else {
        Rng rng = Rng::derive(cfg.seed, 0x71727973ull);
        std::uint32_t qn = std::min(cfg.estimate_queries, n);
        std::vector<std::uint32_t> queries = rng.sample_distinct(n, qn, kInvalidId);
        std::vector<std::vector<Neighbor>> rows(queries.size());
#pragma omp parallel for num_threads(std::max(cfg.threads, 1)) if (cfg.threads > 1) \
    schedule(dynamic, 8)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(queries.size()); ++i) {
            Counters scan_cost;  // oracle work, kept out of the run counters
            rows[static_cast<std::size_t>(i)] =
                exact_row_scan(data, queries[static_cast<std::size_t>(i)],
                               std::min(cfg.k, n - 1), scan_cost);
        }
        report.recall = recall_against_rows(graph, queries, rows);
    }

    report.wall_seconds = omp_get_wtime() - t0;

    if (!cfg.out_graph.empty()) save_graph(graph, cfg.out_graph);
    if (!cfg.out_proximity.empty()) {
        if (hnsw) save_layered_graph(hnsw->to_file(), cfg.out_proximity);
        else if (sw) save_layered_graph(sw->to_file(), cfg.out_proximity);
    }
    if (!cfg.out_report.empty()) {
        std::ofstream out(cfg.out_report);
        out << report.to_json() << "\n";
    }
    return PipelineArtifacts{std::move(graph), std::move(report)};
}

double converged_recall(PipelineConfig cfg, const ConvergedSchedule& schedule) {
    switch (cfg.nbpg) {
        case NbpgMethod::uniprop:
            cfg.uni_iters = schedule.uniprop_iters;
            break;
        case NbpgMethod::deep:
            cfg.deep_ef = schedule.deep_ef;
            break;
        case NbpgMethod::kgraph:
            cfg.kgraph.n_iter = schedule.kgraph_iters;
            break;
        case NbpgMethod::nndes:
            cfg.nndes_iters = schedule.nndes_iters;
            break;
        case NbpgMethod::none:
            throw ArgumentError("converged_recall needs an nbpg method");
    }
    return run_pipeline(cfg).report.recall;
}

std::string sweep_csv(const PipelineConfig& cfg, const std::string& axis,
                      const std::vector<double>& values) {
    static const std::vector<std::pair<NbpgMethod, std::string>> nbpg_axes = {
        {NbpgMethod::uniprop, "uni.iters"},   {NbpgMethod::nndes, "nndes.iters"},
        {NbpgMethod::nndes, "nndes.m"},       {NbpgMethod::kgraph, "kgraph.iters"},
        {NbpgMethod::kgraph, "kgraph.l"},     {NbpgMethod::kgraph, "kgraph.t"},
        {NbpgMethod::kgraph, "kgraph.delta"}, {NbpgMethod::deep, "deep.ef"},
    };
    static const std::vector<std::pair<InitMethod, std::string>> init_axes = {
        {InitMethod::mdiv, "mdiv.t"},      {InitMethod::mdiv, "mdiv.l"},
        {InitMethod::lsh, "lsh.bits"},     {InitMethod::lsh, "lsh.t"},
        {InitMethod::lsh, "lsh.l"},        {InitMethod::rpforest, "rp.trees"},
        {InitMethod::rpforest, "rp.leaf"}, {InitMethod::sw, "sw.ef"},
        {InitMethod::sw, "sw.m"},          {InitMethod::hnsw, "hnsw.m"},
        {InitMethod::hnsw, "hnsw.ef"},
    };
    bool known = false;
    for (const auto& [m, a] : nbpg_axes)
        if (a == axis && cfg.nbpg == m) known = true;
    for (const auto& [m, a] : init_axes)
        if (a == axis && cfg.init == m) known = true;
    if (axis == "k" || axis == "seed") known = true;
    if (!known)
        throw ArgumentError("axis '" + axis + "' is not a parameter of the configured methods");

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    std::ostringstream out;
    out << "value,recall,recall_R,scan_rate,total_dist,wall_seconds\n";
    out.precision(12);
    for (double v : sorted) {
        PipelineConfig run_cfg = cfg;  // shared seed family across the sweep
        std::ostringstream val;
        val << static_cast<std::uint64_t>(v);
        apply_override(run_cfg, axis, val.str());
        RunReport r = run_pipeline(run_cfg).report;
        out << v << "," << r.recall << ",";
        if (r.recall_r) out << *r.recall_r;
        out << "," << r.scan_rate << "," << r.total_dist << "," << r.wall_seconds << "\n";
    }
    return out.str();
}

}  // namespace knng
