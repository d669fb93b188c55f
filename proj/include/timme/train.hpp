#ifndef TIMME_TRAIN_HPP
#define TIMME_TRAIN_HPP

#include "timme/features.hpp"
#include "timme/graph.hpp"
#include "timme/model.hpp"
#include "timme/param_store.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace timme {

struct LabeledSet {
    std::vector<int> nodes;
    std::vector<int> labels;  // parallel to nodes, values in {0, 1}
    std::size_t size() const { return nodes.size(); }
    bool empty() const { return nodes.empty(); }
};

struct NodeSplit {
    LabeledSet train, valid, test;
};

struct LinkSplit {
    EdgeSet train, valid, test;
    EdgeSet valid_negatives, test_negatives;  // fixed at split time
};

struct TaskSplits {
    NodeSplit nodes;
    std::vector<LinkSplit> links;  // one per relation; empty when links inactive
};

/// Training configuration. File paths are consumed by the pipeline layer;
/// the train loop itself reads only the numeric knobs.
struct TrainConfig {
    TrainMode mode{TrainMode::Timme};
    std::string link_relation;  // single_link target
    int epochs{-1};             // -1 resolves to 300, or 200 for single_link
    double learning_rate{0.01};
    double lr_decay_factor{0.1};
    std::vector<int> lr_milestones;
    int link_batch{512};
    int negative_ratio{1};
    int patience{0};  // 0 disables early stopping
    std::uint64_t seed{1};
    int hidden_dim{100};
    int embed_dim{100};
    double dropout{0.0};

    std::vector<std::string> edge_paths;
    std::string node_map_path;
    std::string labels_path;
    std::string seeds_path;
    std::string features_path;
    std::string regions_path;
    std::vector<std::string> relation_names_override;
    int feature_dim{0};
    std::string out_dir{"out"};

    bool classification_active() const { return mode != TrainMode::SingleLink; }
    bool links_active() const { return mode != TrainMode::SingleClass; }
};

int resolved_epochs(const TrainConfig& cfg);
void validate_config(const TrainConfig& cfg);

/// Stratified 8:1:1 split of labeled nodes (floored per class, remainders to
/// train). Fewer than 10 labels, or a class with an empty train part, is an
/// error.
NodeSplit split_node_labels(const LabeledSet& labeled, std::uint64_t seed);

/// Per-relation 85:5:10 split of positive links (floored, remainders to
/// train). A relation with fewer than 20 edges is an error naming it.
std::vector<LinkSplit> split_links(const RelGraph& g, std::uint64_t seed);

/// Uniform (i, j) pairs with i != j, outside `exclusion`, distinct within one
/// draw. Throws when `count` negatives cannot be found in bounded attempts.
EdgeSet sample_negative_links(int num_nodes, std::size_t count,
                              const std::set<Edge>& exclusion, std::mt19937_64& rng);

/// Node and link splits plus fixed evaluation negatives (1:negative_ratio
/// with the positives, seeded from the master seed so ROC/PR stay comparable
/// across runs).
TaskSplits prepare_splits(const RelGraph& g, const LabeledSet& labeled, const TrainConfig& cfg);

/// Training adjacency: every validation/test positive of every relation
/// removed. Identity when links are inactive.
RelGraph make_training_graph(const RelGraph& g, const TaskSplits& splits, const TrainConfig& cfg);

/// One forward pass of the model under a mode: encoder output plus the task
/// heads that mode wires up.
struct ForwardPass {
    Tape tape;
    EncodeOut enc;
    std::optional<HierarchicalOut> hier;

    /// Embedding consumed by link task r: H^(2), or the task embedding E_r in
    /// hierarchical mode.
    Var link_embedding(int relation) const;
};
ForwardPass run_forward(const NormalizedRelationSet& norm, const FeatureStore& fs,
                        const ParameterStore& params, TrainMode mode, int num_relations,
                        double dropout_rate = 0.0, std::mt19937_64* dropout_rng = nullptr);

/// Class probabilities for the mode (plain classifier head, or the
/// hierarchical head's output).
Var class_probs(ForwardPass& fp, const ParameterStore& params);

struct EpochRecord {
    int epoch{0};
    double lr{0.0};
    double loss_total{0.0};
    std::optional<double> loss_class;
    std::vector<std::pair<std::string, double>> link_losses;
    std::optional<double> val_accuracy;
    std::vector<std::pair<std::string, double>> val_link_auc;
    double selection_metric{0.0};
    std::vector<std::vector<double>> alphas;  // two per-layer simplex vectors
    std::vector<double> lambda;               // hierarchical only
};

struct TrainResult {
    ParameterStore params;  // best-validation snapshot
    std::vector<EpochRecord> log;
    int best_epoch{-1};
    double best_metric{0.0};
    int active_relation{-1};  // single_link target index, -1 otherwise
};

/// Full-graph training per the protocol: every epoch encodes once, scores one
/// batch of training positives plus freshly sampled negatives per active link
/// task, sums the task losses unweighted, backpropagates, and takes one Adam
/// step under the step-decay schedule. Returns the best-validation snapshot.
/// Throws on divergence (non-finite loss).
TrainResult train(const NormalizedRelationSet& norm, const FeatureStore& fs,
                  const std::vector<std::string>& relation_names,
                  const TaskSplits& splits, const TrainConfig& cfg);

}  // namespace timme

#endif  // TIMME_TRAIN_HPP
