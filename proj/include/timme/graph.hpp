#ifndef TIMME_GRAPH_HPP
#define TIMME_GRAPH_HPP

#include "timme/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace timme {

using Edge = std::pair<int, int>;
using EdgeSet = std::vector<Edge>;

/// Bijection between external node ids and dense indices [0, N).
struct NodeIdMap {
    std::vector<std::string> to_external;
    std::unordered_map<std::string, int> to_index;

    int size() const { return static_cast<int>(to_external.size()); }
    int index_of(const std::string& id) const;
    std::optional<int> find(const std::string& id) const;
};

/// Directed multi-relational graph: one binary sparse adjacency per relation,
/// plus per-node seed flags. Immutable after construction; editing operations
/// return new graphs.
struct RelGraph {
    int num_nodes{0};
    std::vector<SpMatrix> relations;
    std::vector<std::string> relation_names;
    std::vector<std::uint8_t> seed_flags;
    NodeIdMap ids;

    int num_relations() const { return static_cast<int>(relations.size()); }
    std::size_t edge_count(int relation) const;
    bool has_edge(int relation, int src, int dst) const;
    EdgeSet edges(int relation) const;
};

struct LoadStats {
    std::string path;
    std::size_t lines{0};
    std::size_t edges{0};
    std::size_t duplicates{0};
};

/// Builds a RelGraph from per-relation edge-list files ("src\tdst" lines of
/// external ids), a node map file ("external_id\tdense_index"), and an
/// optional seed file (one external id per line). One relation per file, in
/// argument order; duplicate lines are deduplicated. Unknown ids and empty
/// relation files are errors naming the offending file (and line).
RelGraph load_edge_lists(const std::vector<std::string>& paths,
                         const std::string& node_map_path,
                         const std::string& seed_path = "",
                         std::vector<LoadStats>* stats = nullptr);

/// Builds a RelGraph directly from edge sets (test and generator entry point).
RelGraph make_graph(int num_nodes, const std::vector<EdgeSet>& relations,
                    std::vector<std::string> relation_names = {});

enum class RelationKind { Forward, Reverse, Identity };

struct RelationTag {
    RelationKind kind;
    int relation;  // -1 for the identity slot
};

/// Original relations, their reversals, and the identity:
/// [A_1..A_R, A_1^T..A_R^T, I_N].
std::vector<SpMatrix> augment_relations(const RelGraph& g);
std::vector<RelationTag> augmented_tags(int num_relations);

/// Degree-normalized adjacency with self-loops:
/// D^(-1/2) (A + I) D^(-1/2), with d_i the row-sum of (A + I). The self-loop
/// keeps every degree at least 1.
SpMatrix normalize_adjacency(const SpMatrix& raw);

/// The 2R+1 normalized matrices the encoder consumes.
struct NormalizedRelationSet {
    std::vector<SpMatrix> matrices;
    std::vector<RelationTag> tags;

    int size() const { return static_cast<int>(matrices.size()); }
};

NormalizedRelationSet build_normalized_set(const RelGraph& g);

struct RemoveStats {
    std::size_t removed{0};
    std::size_t missing{0};
};

/// Returns a copy of g with every holdout pair deleted from every relation
/// (an edge held out of one relation must not leak back in through another).
/// Holdout pairs absent from the graph are counted, not fatal.
RelGraph remove_links(const RelGraph& g, const std::vector<EdgeSet>& holdout,
                      RemoveStats* stats = nullptr);

/// Half-open interval over the extended naturals; lo == infinity selects
/// nothing finite (the seeds-only case).
struct ThresholdRange {
    static constexpr std::uint64_t kInfinity = UINT64_MAX;
    std::uint64_t lo{0};
    std::uint64_t hi{kInfinity};  // exclusive; kInfinity means unbounded

    bool contains(std::uint64_t t) const {
        return t >= lo && (hi == kInfinity || t < hi);
    }
    /// Accepts "[lo,hi)", "[lo,inf)" and "{inf}".
    static ThresholdRange parse(const std::string& text);
};

struct NodeCounts {
    std::uint64_t followed_by{0};  // t_{i,1}
    std::uint64_t following{0};    // t_{i,2}
};

struct SubgroupResult {
    std::vector<int> kept;  // dense indices in the original graph, ascending
    RelGraph graph;
};

/// Keeps node i iff it is a seed or max(t_{i,1}, t_{i,2}) lies in range, then
/// induces the subgraph on the kept set. Counts must cover every non-seed
/// node; an empty result is an error.
SubgroupResult filter_subgroup(const RelGraph& g,
                               const std::unordered_map<int, NodeCounts>& counts,
                               const ThresholdRange& range);

}  // namespace timme

#endif  // TIMME_GRAPH_HPP
