// Command-line driver: builds, refines and evaluates k-nearest-neighbor
// graphs over fvecs/text corpora. Exit codes: 0 success, 2 argument error,
// 3 format error, 4 oracle-cap refusal.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "knng/errors.hpp"
#include "knng/hubness.hpp"
#include "knng/io.hpp"
#include "knng/oracle.hpp"
#include "knng/pipeline.hpp"

namespace {

using namespace knng;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
};

PipelineConfig resolve_config(const CommonArgs& args) {
    PipelineConfig cfg;
    if (!args.config_path.empty()) cfg = load_config_file(args.config_path);
    for (const std::string& kv : args.overrides) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("override without '=': " + kv);
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (const char* env = std::getenv("KNNG_THREADS")) {
        int t = std::atoi(env);
        if (t >= 1) cfg.threads = t;
    }
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "key=value config file");
    cmd->add_option("-s,--set", args.overrides, "config override key=value (repeatable)");
}

void emit_report(const RunReport& report, const std::string& path) {
    if (path.empty()) {
        std::cout << report.to_json() << "\n";
    } else {
        std::ofstream out(path);
        out << report.to_json() << "\n";
        std::cout << "report written to " << path << "\n";
    }
}

int cmd_oracle(const CommonArgs& args, const std::string& out_path) {
    PipelineConfig cfg = resolve_config(args);
    validate(cfg);
    Dataset data = load_dataset(cfg.dataset_path, cfg.format);
    if (data.size() > cfg.oracle_cap && !cfg.allow_estimate)
        throw OracleCapError("dataset exceeds the exact-oracle cap (" +
                             std::to_string(cfg.oracle_cap) + " nodes)");
    Counters counters;
    ExactKnng exact = exact_knng(data, std::min(cfg.k, data.size() - 1), counters, cfg.threads);
    std::string path = out_path.empty() ? cfg.out_graph : out_path;
    if (path.empty()) throw ArgumentError("oracle: no output path (out_graph)");
    save_graph(exact.graph, path);
    std::cout << "exact oracle written to " << path << " (total_dist " << counters.total_dist
              << ", scan_rate " << scan_rate(counters, data.size()) << ")\n";
    return 0;
}

int cmd_pipeline(const CommonArgs& args) {
    PipelineConfig cfg = resolve_config(args);
    PipelineArtifacts result = run_pipeline(cfg);
    emit_report(result.report, cfg.out_report);
    if (!cfg.out_graph.empty()) std::cout << "graph written to " << cfg.out_graph << "\n";
    return 0;
}

int cmd_init(const CommonArgs& args) {
    PipelineConfig cfg = resolve_config(args);
    cfg.nbpg = NbpgMethod::none;
    PipelineArtifacts result = run_pipeline(cfg);
    emit_report(result.report, cfg.out_report);
    if (!cfg.out_graph.empty()) std::cout << "graph written to " << cfg.out_graph << "\n";
    return 0;
}

int cmd_refine(const CommonArgs& args, const std::string& in_graph) {
    PipelineConfig cfg = resolve_config(args);
    validate(cfg);
    if (in_graph.empty()) throw ArgumentError("refine: --graph input required");
    Dataset data = load_dataset(cfg.dataset_path, cfg.format);
    KnnGraph g0 = load_graph(in_graph, data);

    BuildResult refined;
    switch (cfg.nbpg) {
        case NbpgMethod::uniprop: {
            UnipropParams p;
            p.n_iter = cfg.uni_iters;
            p.filters = cfg.filters;
            refined = uniprop(g0, data, p, cfg.threads);
            break;
        }
        case NbpgMethod::kgraph: {
            KgraphParams p = cfg.kgraph;
            p.seed = cfg.seed;
            p.filters = cfg.filters;
            refined = kgraph_refine(data, g0.k(), p, cfg.threads, &g0);
            break;
        }
        case NbpgMethod::deep:
            refined = deep_search(g0, g0, data, cfg.deep_ef, cfg.filters, cfg.threads);
            break;
        case NbpgMethod::nndes:
            throw ArgumentError("refine: nndes starts from random pools, use `pipeline`");
        case NbpgMethod::none:
            throw ArgumentError("refine: choose an nbpg method");
    }
    if (cfg.out_graph.empty()) throw ArgumentError("refine: out_graph required");
    save_graph(refined.graph, cfg.out_graph);
    std::cout << "refined graph written to " << cfg.out_graph << " (total_dist "
              << refined.counters.total_dist << ")\n";
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& axis,
              const std::vector<double>& values, const std::string& out_csv) {
    PipelineConfig cfg = resolve_config(args);
    std::string csv = sweep_csv(cfg, axis, values);
    if (out_csv.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(out_csv);
        out << csv;
        std::cout << "sweep written to " << out_csv << "\n";
    }
    return 0;
}

int cmd_hubness(const CommonArgs& args, const std::string& graph_path,
                const std::string& curve_csv, const std::string& buckets_csv_path) {
    PipelineConfig cfg = resolve_config(args);
    validate(cfg);
    Dataset data = load_dataset(cfg.dataset_path, cfg.format);
    if (data.size() > cfg.oracle_cap && !cfg.allow_estimate)
        throw OracleCapError("dataset exceeds the exact-oracle cap (" +
                             std::to_string(cfg.oracle_cap) + " nodes)");
    Counters counters;
    ExactKnng exact = exact_knng(data, std::min(cfg.k, data.size() - 1), counters, cfg.threads);
    HubnessProfile profile = node_hubness(exact);

    std::vector<double> xs = {0.0, 0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0};
    std::string curve = hubness_curve_csv(profile, xs);
    std::cout << "hubness class: " << to_string(classify_hubness(profile)) << "\n"
              << "H(0.001)=" << data_hubness(profile, 0.001)
              << " H(0.01)=" << data_hubness(profile, 0.01)
              << " H(0.1)=" << data_hubness(profile, 0.1) << "\n";
    if (!curve_csv.empty()) {
        std::ofstream(curve_csv) << curve;
        std::cout << "curve written to " << curve_csv << "\n";
    }

    if (!graph_path.empty()) {
        KnnGraph g = load_graph(graph_path, data);
        std::uint32_t max_h = 0;
        for (std::uint32_t h : profile.h) max_h = std::max(max_h, h);
        std::vector<std::uint32_t> edges;
        for (std::uint32_t e = 0; e <= max_h + 1;) {
            edges.push_back(e);
            e = e ? e * 2 : 1;
        }
        edges.push_back(max_h + 1);
        auto buckets = bucketed_accuracy(g, exact, profile, edges);
        std::string table = buckets_csv(buckets);
        if (buckets_csv_path.empty()) {
            std::cout << table;
        } else {
            std::ofstream(buckets_csv_path) << table;
            std::cout << "buckets written to " << buckets_csv_path << "\n";
        }
    }
    return 0;
}

int cmd_report(const CommonArgs& args, const std::string& graph_path) {
    PipelineConfig cfg = resolve_config(args);
    validate(cfg);
    if (graph_path.empty()) throw ArgumentError("report: --graph input required");
    Dataset data = load_dataset(cfg.dataset_path, cfg.format);
    if (data.size() > cfg.oracle_cap && !cfg.allow_estimate)
        throw OracleCapError("dataset exceeds the exact-oracle cap (" +
                             std::to_string(cfg.oracle_cap) + " nodes)");
    KnnGraph g = load_graph(graph_path, data);
    Counters counters;
    ExactKnng exact = exact_knng(data, g.k(), counters, cfg.threads);
    RunReport report;
    report.method = "saved-graph";
    report.n = data.size();
    report.d = data.dim();
    report.k = g.k();
    report.seed = cfg.seed;
    report.threads = cfg.threads;
    report.recall = recall(g, exact);
    report.recall_r = reverse_recall(g, exact).mean;
    report.hubness_class = to_string(classify_hubness(node_hubness(exact)));
    emit_report(report, cfg.out_report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-nearest-neighbor graph construction and evaluation"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string oracle_out, refine_in, sweep_axis, sweep_out;
    std::vector<double> sweep_values;
    std::string hub_graph, hub_curve, hub_buckets, report_graph;

    CLI::App* oracle = app.add_subcommand("oracle", "compute and save the exact KNNG");
    add_common(oracle, args);
    oracle->add_option("-o,--out", oracle_out, "output graph path");

    CLI::App* init = app.add_subcommand("init", "build an initial graph only");
    add_common(init, args);

    CLI::App* refine = app.add_subcommand("refine", "refine a saved graph");
    add_common(refine, args);
    refine->add_option("-g,--graph", refine_in, "input graph path");

    CLI::App* pipeline = app.add_subcommand("pipeline", "run INIT then NBPG and evaluate");
    add_common(pipeline, args);

    CLI::App* sweep = app.add_subcommand("sweep", "sweep one parameter, emit CSV");
    add_common(sweep, args);
    sweep->add_option("-a,--axis", sweep_axis, "config key to sweep")->required();
    sweep->add_option("-v,--values", sweep_values, "axis values")->expected(-1);
    sweep->add_option("-o,--out", sweep_out, "output CSV path");

    CLI::App* hubness = app.add_subcommand("hubness", "hubness profile and bucketed accuracy");
    add_common(hubness, args);
    hubness->add_option("-g,--graph", hub_graph, "graph to bucket (optional)");
    hubness->add_option("--curve", hub_curve, "hubness curve CSV path");
    hubness->add_option("--buckets", hub_buckets, "bucket table CSV path");

    CLI::App* report = app.add_subcommand("report", "metrics for a saved graph");
    add_common(report, args);
    report->add_option("-g,--graph", report_graph, "graph to evaluate")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (oracle->parsed()) return cmd_oracle(args, oracle_out);
        if (init->parsed()) return cmd_init(args);
        if (refine->parsed()) return cmd_refine(args, refine_in);
        if (pipeline->parsed()) return cmd_pipeline(args);
        if (sweep->parsed()) return cmd_sweep(args, sweep_axis, sweep_values, sweep_out);
        if (hubness->parsed()) return cmd_hubness(args, hub_graph, hub_curve, hub_buckets);
        if (report->parsed()) return cmd_report(args, report_graph);
    } catch (const knng::ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const knng::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const knng::OracleCapError& e) {
        std::cerr << "oracle cap: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
