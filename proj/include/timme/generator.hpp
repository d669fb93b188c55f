#ifndef TIMME_GENERATOR_HPP
#define TIMME_GENERATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace timme {

/// Desk-scale synthetic fixture: a directed planted-partition graph with
/// per-node activity propensities shared across relations. Blocks define the
/// labels; the shared propensities correlate the relations with one another,
/// which is what the cross-relation transfer analysis expects, and give the
/// link scorer per-node signal that survives holdout removal. hub_sigma = 0
/// degenerates to the homogeneous planted partition.
struct GeneratorConfig {
    int n{200};
    int blocks{2};
    int relations{3};
    double intra_p{0.05};
    double inter_p{0.005};
    double label_fraction{0.1};
    double hub_sigma{1.3};
    std::uint64_t seed{1};
    std::string out_dir;
};

struct GeneratedFiles {
    std::vector<std::string> edge_paths;
    std::string node_map;
    std::string labels;
    std::string regions;
    std::string config;
};

/// Writes edge lists, node map, labels (exactly floor(label_fraction * n)
/// nodes, stratified over blocks), region file (one region per block), and a
/// ready-to-run config. Byte-identical under the same seed. Throws on
/// parameters out of range.
GeneratedFiles generate_fixture(const GeneratorConfig& cfg);

}  // namespace timme

#endif  // TIMME_GENERATOR_HPP
