#ifndef TIMME_TEXTIO_HPP
#define TIMME_TEXTIO_HPP

#include "timme/graph.hpp"
#include "timme/train.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace timme {

/// Labels file: lines "external_id<TAB>label" with label in {0, 1}.
LabeledSet load_labels_file(const std::string& path, const NodeIdMap& ids);

/// Region file: lines "external_id<TAB>region_code". Ids absent from the node
/// map are skipped (region data routinely covers more users than a subset
/// graph). Returns (dense index, region) pairs in file order.
std::vector<std::pair<int, std::string>> load_regions_file(const std::string& path,
                                                           const NodeIdMap& ids);

/// Count file for subgroup filtering: lines "external_id<TAB>t1<TAB>t2".
std::unordered_map<int, NodeCounts> load_counts_file(const std::string& path, const NodeIdMap& ids);

/// Prediction export: "node_id<TAB>p_liberal<TAB>p_conservative<TAB>label".
void write_predictions(const std::string& path, const NodeIdMap& ids, const Matrix& probs);

/// Embedding export: "node_id<TAB>v1,v2,...".
void write_embeddings(const std::string& path, const NodeIdMap& ids, const Matrix& h);

/// Graph writers (filter command, generator).
void write_node_map(const std::string& path, const NodeIdMap& ids);
void write_edge_list(const std::string& path, const RelGraph& g, int relation);
void write_seed_file(const std::string& path, const RelGraph& g);

}  // namespace timme

#endif  // TIMME_TEXTIO_HPP
