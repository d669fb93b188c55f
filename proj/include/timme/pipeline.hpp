#ifndef TIMME_PIPELINE_HPP
#define TIMME_PIPELINE_HPP

#include "timme/config.hpp"
#include "timme/features.hpp"
#include "timme/graph.hpp"
#include "timme/metrics.hpp"
#include "timme/train.hpp"

#include <optional>
#include <string>
#include <vector>

namespace timme {

/// Inputs named by a config, loaded and validated.
struct LoadedData {
    RelGraph graph;
    FeatureStore features;
    LabeledSet labeled;
    std::vector<LoadStats> load_stats;
};
LoadedData load_inputs(const TrainConfig& cfg);

/// Everything deterministic the pipeline derives from a config before
/// touching parameters: splits, leakage-free training adjacency, normalized
/// relation set.
struct PreparedRun {
    LoadedData data;
    TaskSplits splits;
    RelGraph training_graph;
    NormalizedRelationSet norm;
};
PreparedRun prepare_run(const TrainConfig& cfg);

struct TrainArtifacts {
    std::string checkpoint_path;
    std::string log_path;
    std::string manifest_path;
    TrainResult result;
};
/// Split, remove leakage, train, and write checkpoint + per-epoch JSON log +
/// manifest into cfg.out_dir.
TrainArtifacts run_train(const TrainConfig& cfg);

/// Serializes one epoch record as the training log's JSON line.
std::string epoch_json(const EpochRecord& rec);

/// Rebuilds the model parameters for the config and overlays a checkpoint.
ParameterStore load_model_checkpoint(const TrainConfig& cfg, const PreparedRun& run,
                                     const std::string& checkpoint_path);

/// Test-split metrics as the canonical metrics JSON (also written to
/// cfg.out_dir/metrics.json with a manifest).
std::string run_evaluate(const TrainConfig& cfg, const std::string& checkpoint_path);
std::string metrics_report_json(const TrainConfig& cfg, const PreparedRun& run,
                                const EvalReport& report);

struct PredictArtifacts {
    std::string predictions_path;
    std::string embeddings_path;  // empty unless requested
};
PredictArtifacts run_predict(const TrainConfig& cfg, const std::string& checkpoint_path,
                             bool export_embeddings);

struct ReportArtifacts {
    std::string lambda_path;  // hierarchical checkpoints only
    std::string geo_path;     // empty without a region file
};
/// Lambda relation-importance readout (hierarchical mode) and the per-region
/// ideology table when a region file is configured.
ReportArtifacts run_report(const TrainConfig& cfg, const std::string& checkpoint_path,
                           bool want_lambda, bool want_geo);

struct CrossRelArtifacts {
    std::string json_path;
    std::string text_path;
    CrossRelationResult result;
};
CrossRelArtifacts run_crossrel(const TrainConfig& cfg);

struct FilterOptions {
    std::vector<std::string> edge_paths;
    std::string node_map_path;
    std::string seeds_path;
    std::string counts_path;
    std::string range_text;
    std::string out_dir;
};
struct FilterArtifacts {
    std::vector<std::string> edge_paths;
    std::string node_map_path;
    std::string seeds_path;
    int kept_nodes{0};
};
FilterArtifacts run_filter(const FilterOptions& opts);

}  // namespace timme

#endif  // TIMME_PIPELINE_HPP
