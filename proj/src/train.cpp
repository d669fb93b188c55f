#include "timme/train.hpp"

#include "timme/metrics.hpp"
#include "timme/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace timme {

int resolved_epochs(const TrainConfig& cfg) {
    if (cfg.epochs != -1) return cfg.epochs;
    return cfg.mode == TrainMode::SingleLink ? 200 : 300;
}

void validate_config(const TrainConfig& cfg) {
    require(cfg.epochs == -1 || cfg.epochs > 0, "config: epochs must be positive");
    require(cfg.learning_rate > 0.0, "config: learning_rate must be positive");
    require(cfg.link_batch > 0, "config: link_batch must be positive");
    require(cfg.negative_ratio > 0, "config: negative_ratio must be positive");
    require(cfg.hidden_dim > 0 && cfg.embed_dim > 0, "config: dims must be positive");
    require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "config: dropout must lie in [0, 1)");
    require(cfg.lr_decay_factor > 0.0, "config: lr_decay_factor must be positive");
    for (std::size_t i = 1; i < cfg.lr_milestones.size(); ++i)
        require(cfg.lr_milestones[i - 1] < cfg.lr_milestones[i],
                "config: lr_milestones must be strictly increasing");
    if (cfg.mode == TrainMode::SingleLink)
        require(!cfg.link_relation.empty(), "config: single_link mode needs link_relation");
}

NodeSplit split_node_labels(const LabeledSet& labeled, std::uint64_t seed) {
    if (labeled.size() < 10)
        throw std::invalid_argument("split_node_labels: need at least 10 labeled nodes, got " +
                                    std::to_string(labeled.size()));
    std::vector<std::vector<int>> by_class(2);
    for (std::size_t k = 0; k < labeled.size(); ++k) {
        int y = labeled.labels[k];
        if (y != 0 && y != 1)
            throw std::invalid_argument("split_node_labels: labels must be binary, got " + std::to_string(y));
        by_class[static_cast<std::size_t>(y)].push_back(labeled.nodes[k]);
    }

    auto rng = seeded_engine(seed, "node_split");
    NodeSplit split;
    for (int y = 0; y < 2; ++y) {
        auto& nodes = by_class[static_cast<std::size_t>(y)];
        std::shuffle(nodes.begin(), nodes.end(), rng);
        std::size_t n = nodes.size();
        std::size_t n_valid = n / 10, n_test = n / 10;
        std::size_t in_train = 0;
        for (std::size_t k = 0; k < n; ++k) {
            LabeledSet& part = k < n_valid             ? split.valid
                               : k < n_valid + n_test ? split.test
                                                      : split.train;
            part.nodes.push_back(nodes[k]);
            part.labels.push_back(y);
            in_train += &part == &split.train;
        }
        if (in_train == 0)
            throw std::invalid_argument("split_node_labels: class " + std::to_string(y) +
                                        " is absent from the training split");
    }
    return split;
}

std::vector<LinkSplit> split_links(const RelGraph& g, std::uint64_t seed) {
    std::vector<LinkSplit> out(static_cast<std::size_t>(g.num_relations()));
    for (int r = 0; r < g.num_relations(); ++r) {
        EdgeSet edges = g.edges(r);
        if (edges.size() < 20)
            throw std::invalid_argument("split_links: relation '" + g.relation_names[static_cast<std::size_t>(r)] +
                                        "' has only " + std::to_string(edges.size()) +
                                        " edges (need at least 20)");
        auto rng = seeded_engine(seed, "link_split/" + std::to_string(r));
        std::shuffle(edges.begin(), edges.end(), rng);
        std::size_t n = edges.size();
        std::size_t n_valid = n / 20;        // 5%
        std::size_t n_test = n / 10;         // 10%
        LinkSplit& s = out[static_cast<std::size_t>(r)];
        for (std::size_t k = 0; k < n; ++k) {
            if (k < n_valid)
                s.valid.push_back(edges[k]);
            else if (k < n_valid + n_test)
                s.test.push_back(edges[k]);
            else
                s.train.push_back(edges[k]);
        }
    }
    return out;
}

EdgeSet sample_negative_links(int num_nodes, std::size_t count,
                              const std::set<Edge>& exclusion, std::mt19937_64& rng) {
    EdgeSet out;
    if (count == 0) return out;
    if (num_nodes < 2)
        throw std::runtime_error("sample_negative_links: need at least two nodes");
    std::set<Edge> drawn;
    std::uniform_int_distribution<int> pick(0, num_nodes - 1);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 200 * count + 10000;
    while (out.size() < count) {
        if (++attempts > max_attempts)
            throw std::runtime_error("sample_negative_links: could not find " + std::to_string(count) +
                                     " negatives in " + std::to_string(max_attempts) +
                                     " attempts (graph too dense?)");
        int i = pick(rng), j = pick(rng);
        if (i == j) continue;
        Edge e{i, j};
        if (exclusion.count(e) || !drawn.insert(e).second) continue;
        out.push_back(e);
    }
    return out;
}

TaskSplits prepare_splits(const RelGraph& g, const LabeledSet& labeled, const TrainConfig& cfg) {
    TaskSplits splits;
    if (cfg.classification_active()) splits.nodes = split_node_labels(labeled, cfg.seed);
    if (cfg.links_active()) {
        splits.links = split_links(g, cfg.seed);
        for (int r = 0; r < g.num_relations(); ++r) {
            LinkSplit& s = splits.links[static_cast<std::size_t>(r)];
            EdgeSet all = g.edges(r);
            std::set<Edge> exclusion(all.begin(), all.end());
            auto rng = seeded_engine(cfg.seed, "eval_neg/" + std::to_string(r));
            s.valid_negatives = sample_negative_links(
                g.num_nodes, s.valid.size() * static_cast<std::size_t>(cfg.negative_ratio), exclusion, rng);
            s.test_negatives = sample_negative_links(
                g.num_nodes, s.test.size() * static_cast<std::size_t>(cfg.negative_ratio), exclusion, rng);
        }
    }
    return splits;
}

RelGraph make_training_graph(const RelGraph& g, const TaskSplits& splits, const TrainConfig& cfg) {
    if (!cfg.links_active()) return g;
    std::vector<EdgeSet> holdout;
    holdout.reserve(splits.links.size());
    for (const LinkSplit& s : splits.links) {
        EdgeSet h = s.valid;
        h.insert(h.end(), s.test.begin(), s.test.end());
        holdout.push_back(std::move(h));
    }
    return remove_links(g, holdout);
}

Var ForwardPass::link_embedding(int relation) const {
    if (hier) return hier->task_embeddings.at(static_cast<std::size_t>(relation));
    return enc.h;
}

ForwardPass run_forward(const NormalizedRelationSet& norm, const FeatureStore& fs,
                        const ParameterStore& params, TrainMode mode, int num_relations,
                        double dropout_rate, std::mt19937_64* dropout_rng) {
    ForwardPass fp;
    fp.enc = encode(fp.tape, norm, fs, params, false, dropout_rate, dropout_rng);
    if (mode == TrainMode::Hierarchical)
        fp.hier = hierarchical_forward(fp.tape, fp.enc.h, params, num_relations);
    return fp;
}

Var class_probs(ForwardPass& fp, const ParameterStore& params) {
    if (fp.hier) return fp.hier->probs;
    return classify(fp.tape, fp.enc.h, params);
}

namespace {

std::vector<int> active_link_relations(const TrainConfig& cfg,
                                       const std::vector<std::string>& relation_names) {
    if (!cfg.links_active()) return {};
    if (cfg.mode != TrainMode::SingleLink) {
        std::vector<int> all(relation_names.size());
        for (std::size_t r = 0; r < all.size(); ++r) all[r] = static_cast<int>(r);
        return all;
    }
    for (std::size_t r = 0; r < relation_names.size(); ++r)
        if (relation_names[r] == cfg.link_relation) return {static_cast<int>(r)};
    throw std::invalid_argument("unknown link relation '" + cfg.link_relation + "'");
}

std::vector<double> row_values(const Matrix& m) {
    std::vector<double> out(static_cast<std::size_t>(m.size()));
    for (Eigen::Index k = 0; k < m.size(); ++k) out[static_cast<std::size_t>(k)] = m(k);
    return out;
}

}  // namespace

TrainResult train(const NormalizedRelationSet& norm, const FeatureStore& fs,
                  const std::vector<std::string>& relation_names,
                  const TaskSplits& splits, const TrainConfig& cfg) {
    validate_config(cfg);
    const int N = static_cast<int>(norm.matrices.at(0).rows());
    const int R = static_cast<int>(relation_names.size());
    const std::vector<int> link_rels = active_link_relations(cfg, relation_names);
    const bool classification = cfg.classification_active();

    ModelDims dims;
    dims.input_dim = fs.one_hot() ? N : fs.dim;
    dims.hidden_dim = cfg.hidden_dim;
    dims.embed_dim = cfg.embed_dim;
    dims.num_relations = R;

    ParameterStore params;
    auto init_rng = seeded_engine(cfg.seed, "init");
    init_model_parameters(params, dims, cfg.mode, fs.one_hot(), init_rng,
                          cfg.mode == TrainMode::SingleLink ? link_rels.at(0) : -1);
    register_feature_parameters(fs, params, init_rng);

    // Per-relation exclusion sets for negative sampling: all positives.
    std::vector<std::set<Edge>> exclusion(static_cast<std::size_t>(R));
    for (int r : link_rels) {
        const LinkSplit& s = splits.links.at(static_cast<std::size_t>(r));
        auto& ex = exclusion[static_cast<std::size_t>(r)];
        ex.insert(s.train.begin(), s.train.end());
        ex.insert(s.valid.begin(), s.valid.end());
        ex.insert(s.test.begin(), s.test.end());
    }

    AdamState adam;
    auto loop_rng = seeded_engine(cfg.seed, "train_loop");
    auto dropout_rng = seeded_engine(cfg.seed, "dropout");

    TrainResult result;
    result.active_relation = cfg.mode == TrainMode::SingleLink ? link_rels.at(0) : -1;
    const int epochs = resolved_epochs(cfg);
    double best = -std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double lr = lr_schedule(epoch, cfg.learning_rate, cfg.lr_decay_factor, cfg.lr_milestones);

        ForwardPass fp = run_forward(norm, fs, params, cfg.mode, R, cfg.dropout,
                                     cfg.dropout > 0.0 ? &dropout_rng : nullptr);
        Tape& t = fp.tape;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;

        std::optional<Var> total;
        auto add_task = [&](Var loss) { total = total ? add(t, *total, loss) : loss; };

        if (classification) {
            Var probs = class_probs(fp, params);
            Var l0 = cross_entropy_rows(t, probs, splits.nodes.train.nodes, splits.nodes.train.labels);
            rec.loss_class = t.value(l0)(0, 0);
            add_task(l0);
        }
        for (int r : link_rels) {
            const LinkSplit& s = splits.links.at(static_cast<std::size_t>(r));
            // One batch of training positives, resampled negatives each epoch.
            EdgeSet batch;
            const std::size_t want = std::min<std::size_t>(s.train.size(),
                                                           static_cast<std::size_t>(cfg.link_batch));
            if (want == s.train.size()) {
                batch = s.train;
            } else {
                std::vector<std::size_t> idx(s.train.size());
                for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
                for (std::size_t k = 0; k < want; ++k) {
                    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
                    std::swap(idx[k], idx[pick(loop_rng)]);
                    batch.push_back(s.train[idx[k]]);
                }
            }
            EdgeSet negs = sample_negative_links(
                N, batch.size() * static_cast<std::size_t>(cfg.negative_ratio),
                exclusion[static_cast<std::size_t>(r)], loop_rng);

            EdgeSet pairs = batch;
            pairs.insert(pairs.end(), negs.begin(), negs.end());
            std::vector<double> labels(batch.size(), 1.0);
            labels.resize(pairs.size(), 0.0);

            Var scores = score_links(t, fp.link_embedding(r), r, params, pairs);
            Var lr_loss = sigmoid_bce_sum(t, scores, labels);
            rec.link_losses.emplace_back(relation_names[static_cast<std::size_t>(r)],
                                         t.value(lr_loss)(0, 0));
            add_task(lr_loss);
        }
        if (!total) throw std::logic_error("train: no active task");

        rec.loss_total = t.value(*total)(0, 0);
        if (!std::isfinite(rec.loss_total))
            throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch) + " (lr " + std::to_string(lr) + ")");

        rec.alphas.push_back(row_values(t.value(fp.enc.alphas[0])));
        rec.alphas.push_back(row_values(t.value(fp.enc.alphas[1])));
        if (fp.hier) rec.lambda = row_values(t.value(fp.hier->lambda));

        GradientMap grads = t.backward(*total);
        adam_step(params, grads, adam, lr);

        // Validation pass with the updated parameters, dropout off.
        {
            ForwardPass vp = run_forward(norm, fs, params, cfg.mode, R);
            double selection = 0.0;
            int selection_terms = 0;
            if (classification && !splits.nodes.valid.empty()) {
                const Matrix& probs = vp.tape.value(class_probs(vp, params));
                std::vector<int> pred, truth;
                for (std::size_t k = 0; k < splits.nodes.valid.size(); ++k) {
                    int node = splits.nodes.valid.nodes[k];
                    pred.push_back(probs(node, 1) > probs(node, 0) ? 1 : 0);
                    truth.push_back(splits.nodes.valid.labels[k]);
                }
                auto [f1, acc] = classification_metrics(pred, truth);
                (void)f1;
                rec.val_accuracy = acc;
            }
            for (int r : link_rels) {
                const LinkSplit& s = splits.links.at(static_cast<std::size_t>(r));
                if (s.valid.empty() || s.valid_negatives.empty()) continue;
                EdgeSet pairs = s.valid;
                pairs.insert(pairs.end(), s.valid_negatives.begin(), s.valid_negatives.end());
                std::vector<int> labels(s.valid.size(), 1);
                labels.resize(pairs.size(), 0);
                const Matrix& sc = vp.tape.value(score_links(vp.tape, vp.link_embedding(r), r, params, pairs));
                auto [roc, pr] = link_metrics(row_values(sc), labels);
                (void)pr;
                rec.val_link_auc.emplace_back(relation_names[static_cast<std::size_t>(r)], roc);
                if (!classification) {
                    selection += roc;
                    ++selection_terms;
                }
            }
            // Model selection: validation accuracy when classification is
            // active, mean link ROC-AUC in link-only modes.
            if (classification && rec.val_accuracy) {
                selection = *rec.val_accuracy;
                selection_terms = 1;
            }
            rec.selection_metric = selection_terms > 0 ? selection / selection_terms
                                                       : -rec.loss_total;
        }

        result.log.push_back(rec);
        // Ties go to the later epoch: on tiny validation sets the metric
        // saturates early and the converged parameters are the better pick.
        if (rec.selection_metric >= best) {
            best = rec.selection_metric;
            result.best_epoch = epoch;
            result.best_metric = best;
            result.params = params;
        }
        if (cfg.patience > 0 && epoch - result.best_epoch >= cfg.patience) break;
    }

    if (result.best_epoch < 0) {
        result.params = params;
        result.best_epoch = epochs - 1;
    }
    return result;
}

}  // namespace timme
