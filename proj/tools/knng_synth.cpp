// Seeded synthetic-dataset generator (fvecs output) for experiments and
// smoke tests: uniform hypercube, isotropic Gaussian, clustered Gaussian.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "knng/io.hpp"
#include "knng/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic fvecs generator"};
    std::string kind = "gaussian";
    std::string out;
    std::uint32_t n = 10000, d = 16, clusters = 32;
    std::uint64_t seed = 1;
    app.add_option("-t,--type", kind, "uniform | gaussian | clustered")
        ->check(CLI::IsMember({"uniform", "gaussian", "clustered"}));
    app.add_option("-n", n, "number of vectors");
    app.add_option("-d", d, "dimensionality");
    app.add_option("--clusters", clusters, "cluster count (clustered only)");
    app.add_option("--seed", seed, "rng seed");
    app.add_option("-o,--out", out, "output fvecs path")->required();
    CLI11_PARSE(app, argc, argv);

    knng::Dataset data = kind == "uniform"
                             ? knng::make_uniform_hypercube(n, d, seed)
                             : kind == "clustered"
                                   ? knng::make_clustered_gaussian(n, d, clusters, seed)
                                   : knng::make_gaussian(n, d, seed);
    knng::save_fvecs(data, out);
    std::cout << "wrote " << out << " (n=" << n << ", d=" << d << ")\n";
    return 0;
}
