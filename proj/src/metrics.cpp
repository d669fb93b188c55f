#include "timme/metrics.hpp"

#include "timme/rng.hpp"
#include "timme/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace timme {

std::pair<double, double> classification_metrics(const std::vector<int>& predicted,
                                                 const std::vector<int>& truth) {
    if (predicted.empty()) throw std::invalid_argument("classification_metrics: empty input");
    if (predicted.size() != truth.size())
        throw std::invalid_argument("classification_metrics: length mismatch");

    std::size_t correct = 0;
    // confusion[t][p]
    std::size_t confusion[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        int p = predicted[k], t = truth[k];
        if ((p != 0 && p != 1) || (t != 0 && t != 1))
            throw std::invalid_argument("classification_metrics: labels must be binary");
        confusion[t][p] += 1;
        if (p == t) ++correct;
    }
    double f1_sum = 0.0;
    for (int c = 0; c < 2; ++c) {
        double tp = static_cast<double>(confusion[c][c]);
        double fp = static_cast<double>(confusion[1 - c][c]);
        double fn = static_cast<double>(confusion[c][1 - c]);
        double denom = 2 * tp + fp + fn;
        f1_sum += denom > 0 ? 2 * tp / denom : 0.0;
    }
    double accuracy = static_cast<double>(correct) / static_cast<double>(predicted.size());
    return {f1_sum / 2.0, accuracy};
}

std::pair<double, double> link_metrics(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("link_metrics: length mismatch");
    std::size_t pos = 0, neg = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("link_metrics: labels must be binary");
        (y == 1 ? pos : neg) += 1;
    }
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("link_metrics: both classes must be present");

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // ROC-AUC as the Mann-Whitney statistic via average ranks over ties.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    double roc = (rank_sum_pos - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1)) /
                 (static_cast<double>(pos) * static_cast<double>(neg));

    // PR-AUC: step interpolation over descending-score thresholds, tied
    // scores grouped into one threshold.
    double pr = 0.0;
    double prev_recall = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t k = n;
    while (k > 0) {
        std::size_t j = k;
        double s = scores[order[k - 1]];
        while (j > 0 && scores[order[j - 1]] == s) {
            if (labels[order[j - 1]] == 1)
                ++tp;
            else
                ++fp;
            --j;
        }
        double recall = static_cast<double>(tp) / static_cast<double>(pos);
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        pr += (recall - prev_recall) * precision;
        prev_recall = recall;
        k = j;
    }
    return {roc, pr};
}

std::vector<GeoRow> geo_aggregate(
    const std::vector<std::pair<std::string, std::optional<int>>>& entries) {
    struct Acc {
        std::size_t users{0};
        std::size_t liberal{0};
    };
    std::map<std::string, Acc> regions;
    for (const auto& [region, label] : entries) {
        Acc& acc = regions[region];
        if (!label) continue;
        if (*label != 0 && *label != 1)
            throw std::invalid_argument("geo_aggregate: labels must be binary");
        acc.users += 1;
        if (*label == 0) acc.liberal += 1;
    }
    std::vector<GeoRow> out;
    out.reserve(regions.size());
    for (const auto& [region, acc] : regions) {
        GeoRow row;
        row.region = region;
        row.users = acc.users;
        if (acc.users > 0) {
            row.fraction = static_cast<double>(acc.liberal) / static_cast<double>(acc.users);
            row.bin = std::min(static_cast<int>(std::floor(row.fraction * 8.0)), 7);
        }
        out.push_back(std::move(row));
    }
    return out;
}

namespace {

std::vector<double> column_values(const Matrix& m) {
    std::vector<double> out(static_cast<std::size_t>(m.size()));
    for (Eigen::Index k = 0; k < m.size(); ++k) out[static_cast<std::size_t>(k)] = m(k);
    return out;
}

std::pair<double, double> test_link_metrics(const NormalizedRelationSet& norm,
                                            const FeatureStore& fs, const ParameterStore& params,
                                            TrainMode mode, int num_relations,
                                            int head_relation, const LinkSplit& split) {
    ForwardPass fp = run_forward(norm, fs, params, mode, num_relations);
    EdgeSet pairs = split.test;
    pairs.insert(pairs.end(), split.test_negatives.begin(), split.test_negatives.end());
    std::vector<int> labels(split.test.size(), 1);
    labels.resize(pairs.size(), 0);
    const Matrix& sc =
        fp.tape.value(score_links(fp.tape, fp.link_embedding(head_relation), head_relation, params, pairs));
    return link_metrics(column_values(sc), labels);
}

}  // namespace

std::string CrossRelationResult::to_text() const {
    std::size_t width = 10;
    for (const std::string& n : names) width = std::max(width, n.size() + 2);
    std::ostringstream os;
    os << std::string(width, ' ');
    for (const std::string& n : names) {
        os << n;
        os << std::string(width - n.size(), ' ');
    }
    os << "\n";
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        const std::string& n = names[static_cast<std::size_t>(i)];
        os << n << std::string(width - n.size(), ' ');
        for (Eigen::Index j = 0; j < table.cols(); ++j) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", table(i, j));
            std::string cell(buf);
            os << cell << std::string(width - cell.size(), ' ');
        }
        os << "\n";
    }
    return os.str();
}

CrossRelationResult cross_relation_matrix(const RelGraph& training_graph,
                                          const FeatureStore& fs,
                                          const TaskSplits& splits,
                                          const TrainConfig& cfg) {
    const int R = training_graph.num_relations();
    if (static_cast<int>(splits.links.size()) != R)
        throw std::invalid_argument("cross_relation_matrix: link splits missing");

    NormalizedRelationSet norm = build_normalized_set(training_graph);
    CrossRelationResult result;
    result.names = training_graph.relation_names;
    result.table = Matrix::Zero(R, R);

    for (int i = 0; i < R; ++i) {
        TrainConfig row_cfg = cfg;
        row_cfg.mode = TrainMode::SingleLink;
        row_cfg.link_relation = training_graph.relation_names[static_cast<std::size_t>(i)];
        row_cfg.seed = fnv1a64("crossrel/" + std::to_string(i)) ^ cfg.seed;
        TrainResult trained = train(norm, fs, training_graph.relation_names, splits, row_cfg);
        for (int j = 0; j < R; ++j) {
            auto [roc, pr] = test_link_metrics(norm, fs, trained.params, TrainMode::SingleLink, R,
                                               i, splits.links[static_cast<std::size_t>(j)]);
            (void)pr;
            result.table(i, j) = roc;
        }
    }
    return result;
}

EvalReport evaluate_model(const NormalizedRelationSet& norm, const FeatureStore& fs,
                          const ParameterStore& params,
                          const std::vector<std::string>& relation_names,
                          const TaskSplits& splits, const TrainConfig& cfg) {
    const int R = static_cast<int>(relation_names.size());
    EvalReport report;
    ForwardPass fp = run_forward(norm, fs, params, cfg.mode, R);

    if (cfg.classification_active()) {
        if (splits.nodes.test.empty())
            throw std::runtime_error("evaluate_model: empty test split");
        const Matrix& probs = fp.tape.value(class_probs(fp, params));
        std::vector<int> pred, truth;
        for (std::size_t k = 0; k < splits.nodes.test.size(); ++k) {
            int node = splits.nodes.test.nodes[k];
            pred.push_back(probs(node, 1) > probs(node, 0) ? 1 : 0);
            truth.push_back(splits.nodes.test.labels[k]);
        }
        report.classification = classification_metrics(pred, truth);
    }
    if (cfg.links_active()) {
        for (int r = 0; r < R; ++r) {
            if (cfg.mode == TrainMode::SingleLink &&
                relation_names[static_cast<std::size_t>(r)] != cfg.link_relation)
                continue;
            const LinkSplit& s = splits.links.at(static_cast<std::size_t>(r));
            EdgeSet pairs = s.test;
            pairs.insert(pairs.end(), s.test_negatives.begin(), s.test_negatives.end());
            std::vector<int> labels(s.test.size(), 1);
            labels.resize(pairs.size(), 0);
            const Matrix& sc =
                fp.tape.value(score_links(fp.tape, fp.link_embedding(r), r, params, pairs));
            auto [roc, pr] = link_metrics(column_values(sc), labels);
            report.links.push_back({relation_names[static_cast<std::size_t>(r)], roc, pr});
        }
    }
    return report;
}

}  // namespace timme
