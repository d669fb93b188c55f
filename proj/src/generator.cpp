#include "timme/generator.hpp"

#include "timme/linalg.hpp"
#include "timme/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <vector>

namespace timme {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return os;
}

}  // namespace

GeneratedFiles generate_fixture(const GeneratorConfig& cfg) {
    require(cfg.n >= 2, "generate: n must be at least 2");
    require(cfg.blocks >= 1 && cfg.blocks <= cfg.n, "generate: blocks must lie in [1, n]");
    require(cfg.relations >= 1, "generate: relations must be positive");
    require(cfg.intra_p >= 0.0 && cfg.intra_p <= 1.0, "generate: intra_p must lie in [0, 1]");
    require(cfg.inter_p >= 0.0 && cfg.inter_p <= 1.0, "generate: inter_p must lie in [0, 1]");
    require(cfg.intra_p > cfg.inter_p, "generate: intra_p must exceed inter_p for a learnable fixture");
    require(cfg.label_fraction >= 0.0 && cfg.label_fraction <= 1.0,
            "generate: label_fraction must lie in [0, 1]");
    require(cfg.hub_sigma >= 0.0, "generate: hub_sigma must be nonnegative");
    require(!cfg.out_dir.empty(), "generate: out_dir required");

    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);

    // Contiguous blocks; node i's block is fixed by index.
    auto block_of = [&](int i) { return static_cast<int>((static_cast<long long>(i) * cfg.blocks) / cfg.n); };

    // Shared per-node propensities, mean 1.
    std::vector<double> propensity(static_cast<std::size_t>(cfg.n), 1.0);
    if (cfg.hub_sigma > 0.0) {
        auto rng = seeded_engine(cfg.seed, "gen/propensity");
        std::normal_distribution<double> z(0.0, 1.0);
        for (int i = 0; i < cfg.n; ++i)
            propensity[static_cast<std::size_t>(i)] =
                std::exp(cfg.hub_sigma * z(rng) - 0.5 * cfg.hub_sigma * cfg.hub_sigma);
    }

    GeneratedFiles files;
    files.node_map = (out / "nodes.tsv").string();
    files.labels = (out / "labels.tsv").string();
    files.regions = (out / "regions.tsv").string();
    files.config = (out / "fixture.conf").string();

    {
        auto os = open_out(files.node_map);
        for (int i = 0; i < cfg.n; ++i) os << "n" << i << '\t' << i << '\n';
    }

    for (int r = 0; r < cfg.relations; ++r) {
        fs::path path = out / ("rel" + std::to_string(r) + ".tsv");
        files.edge_paths.push_back(path.string());
        auto os = open_out(path);
        auto rng = seeded_engine(cfg.seed, "gen/edges/" + std::to_string(r));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < cfg.n; ++i) {
            for (int j = 0; j < cfg.n; ++j) {
                if (i == j) continue;
                double base = block_of(i) == block_of(j) ? cfg.intra_p : cfg.inter_p;
                double p = std::min(1.0, propensity[static_cast<std::size_t>(i)] *
                                              propensity[static_cast<std::size_t>(j)] * base);
                if (u(rng) < p) os << 'n' << i << '\t' << 'n' << j << '\n';
            }
        }
    }

    {
        // Exactly floor(label_fraction * n) labels, stratified over blocks.
        // Labels go to the most active nodes of each block, the way ground
        // truth sits on the seed accounts of a political-centered network.
        const int want = static_cast<int>(std::floor(cfg.label_fraction * cfg.n));
        std::vector<std::vector<int>> members(static_cast<std::size_t>(cfg.blocks));
        for (int i = 0; i < cfg.n; ++i) members[static_cast<std::size_t>(block_of(i))].push_back(i);
        for (auto& m : members)
            std::stable_sort(m.begin(), m.end(), [&](int a, int b) {
                return propensity[static_cast<std::size_t>(a)] > propensity[static_cast<std::size_t>(b)];
            });

        std::vector<int> picked;
        std::vector<std::size_t> cursor(static_cast<std::size_t>(cfg.blocks), 0);
        int b = 0;
        while (static_cast<int>(picked.size()) < want) {
            auto& m = members[static_cast<std::size_t>(b)];
            auto& c = cursor[static_cast<std::size_t>(b)];
            if (c < m.size()) picked.push_back(m[c++]);
            b = (b + 1) % cfg.blocks;
        }
        std::sort(picked.begin(), picked.end());
        auto os = open_out(files.labels);
        for (int i : picked) os << 'n' << i << '\t' << block_of(i) << '\n';
    }

    {
        auto os = open_out(files.regions);
        for (int i = 0; i < cfg.n; ++i) os << 'n' << i << "\tregion_" << block_of(i) << '\n';
    }

    {
        auto os = open_out(files.config);
        os << "# synthetic planted-partition fixture\n";
        os << "edges = ";
        for (std::size_t k = 0; k < files.edge_paths.size(); ++k)
            os << (k ? "," : "") << files.edge_paths[k];
        os << "\n";
        os << "node_map = " << files.node_map << "\n";
        os << "labels = " << files.labels << "\n";
        os << "regions = " << files.regions << "\n";
        os << "mode = timme\n";
        os << "lr_milestones = 150,225\n";
        os << "seed = " << cfg.seed << "\n";
        os << "out_dir = " << (out / "run").string() << "\n";
    }
    return files;
}

}  // namespace timme
