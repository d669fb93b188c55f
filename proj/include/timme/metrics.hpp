#ifndef TIMME_METRICS_HPP
#define TIMME_METRICS_HPP

#include "timme/graph.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace timme {

struct TrainConfig;
struct TaskSplits;
class ParameterStore;
struct FeatureStore;

/// (macro-F1, accuracy) over binary labels. Macro-F1 averages the two
/// per-class F1 scores; a class with no true and no predicted members
/// contributes 0. Empty input is an error.
std::pair<double, double> classification_metrics(const std::vector<int>& predicted,
                                                 const std::vector<int>& truth);

/// (ROC-AUC, PR-AUC). ROC-AUC is the rank statistic with ties counted half;
/// PR-AUC steps over descending-score thresholds. Both classes must appear.
std::pair<double, double> link_metrics(const std::vector<double>& scores,
                                       const std::vector<int>& labels);

/// Per-region ideology aggregate. One entry per region-file line:
/// (region code, predicted label or absent). Users counts the labeled
/// entries; fraction is the label-0 (liberal) share; bin = min(floor(8f), 7).
/// Regions whose entries are all unlabeled come out with users == 0 and no
/// bin. Rows are sorted by region code.
struct GeoRow {
    std::string region;
    std::size_t users{0};
    double fraction{0.0};
    std::optional<int> bin;
};
std::vector<GeoRow> geo_aggregate(
    const std::vector<std::pair<std::string, std::optional<int>>>& entries);

/// Cross-relation transfer table: entry (i, j) is the ROC-AUC on relation j's
/// test links of a single-task model trained only on relation i's link task
/// (relation j's pairs scored through the trained head). Trainings run
/// sequentially with per-row seeds derived from the config seed.
struct CrossRelationResult {
    Matrix table;  // R x R
    std::vector<std::string> names;

    std::string to_text() const;
};
CrossRelationResult cross_relation_matrix(const RelGraph& training_graph,
                                          const FeatureStore& fs,
                                          const TaskSplits& splits,
                                          const TrainConfig& cfg);

/// Test-split metrics of a trained model.
struct LinkMetricsRow {
    std::string relation;
    double roc_auc{0.0};
    double pr_auc{0.0};
};
struct EvalReport {
    std::optional<std::pair<double, double>> classification;  // (macro_f1, accuracy)
    std::vector<LinkMetricsRow> links;
};
EvalReport evaluate_model(const NormalizedRelationSet& norm, const FeatureStore& fs,
                          const ParameterStore& params,
                          const std::vector<std::string>& relation_names,
                          const TaskSplits& splits, const TrainConfig& cfg);

}  // namespace timme

#endif  // TIMME_METRICS_HPP
