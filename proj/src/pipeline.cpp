#include "timme/pipeline.hpp"

#include "timme/manifest.hpp"
#include "timme/rng.hpp"
#include "timme/textio.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace timme {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_out_dir(const TrainConfig& cfg) {
    require(!cfg.out_dir.empty(), "config: out_dir required");
    fs::create_directories(cfg.out_dir);
}

std::vector<std::pair<std::string, std::string>> input_digests(const TrainConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const std::string& p : cfg.edge_paths) out.emplace_back(p, file_digest(p));
    auto add = [&](const std::string& p) {
        if (!p.empty()) out.emplace_back(p, file_digest(p));
    };
    add(cfg.node_map_path);
    add(cfg.labels_path);
    add(cfg.seeds_path);
    add(cfg.features_path);
    add(cfg.regions_path);
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << text;
}

std::vector<double> matrix_row(const Matrix& m, Eigen::Index i) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(j)] = m(i, j);
    return out;
}

}  // namespace

LoadedData load_inputs(const TrainConfig& cfg) {
    require(!cfg.edge_paths.empty(), "config: edges required");
    require(!cfg.node_map_path.empty(), "config: node_map required");

    LoadedData data;
    data.graph = load_edge_lists(cfg.edge_paths, cfg.node_map_path, cfg.seeds_path, &data.load_stats);
    if (!cfg.relation_names_override.empty()) {
        if (cfg.relation_names_override.size() != data.graph.relations.size())
            throw std::invalid_argument("config: relation_names lists " +
                                        std::to_string(cfg.relation_names_override.size()) +
                                        " names for " + std::to_string(data.graph.relations.size()) +
                                        " edge files");
        data.graph.relation_names = cfg.relation_names_override;
    }

    if (cfg.features_path.empty()) {
        data.features = one_hot_features(data.graph.num_nodes);
    } else {
        require(cfg.feature_dim > 0, "config: feature_dim required with features");
        data.features =
            load_feature_file(cfg.features_path, data.graph.ids, data.graph.num_nodes, cfg.feature_dim);
    }

    if (!cfg.labels_path.empty()) data.labeled = load_labels_file(cfg.labels_path, data.graph.ids);
    if (cfg.classification_active() && data.labeled.empty())
        throw std::invalid_argument("config: mode '" + to_string(cfg.mode) + "' needs a labels file");
    return data;
}

PreparedRun prepare_run(const TrainConfig& cfg) {
    PreparedRun run;
    run.data = load_inputs(cfg);
    run.splits = prepare_splits(run.data.graph, run.data.labeled, cfg);
    run.training_graph = make_training_graph(run.data.graph, run.splits, cfg);
    run.norm = build_normalized_set(run.training_graph);
    return run;
}

std::string epoch_json(const EpochRecord& rec) {
    json j;
    j["epoch"] = rec.epoch;
    j["lr"] = rec.lr;
    j["loss_total"] = rec.loss_total;
    json losses = json::object();
    if (rec.loss_class) losses["classification"] = *rec.loss_class;
    for (const auto& [name, value] : rec.link_losses) losses["link:" + name] = value;
    j["losses"] = losses;
    json val = json::object();
    if (rec.val_accuracy) val["accuracy"] = *rec.val_accuracy;
    if (!rec.val_link_auc.empty()) {
        json auc = json::object();
        for (const auto& [name, value] : rec.val_link_auc) auc[name] = value;
        val["link_auc"] = auc;
    }
    j["val"] = val;
    j["selection"] = rec.selection_metric;
    j["alpha"] = rec.alphas;
    if (!rec.lambda.empty()) j["lambda"] = rec.lambda;
    return j.dump();
}

TrainArtifacts run_train(const TrainConfig& cfg) {
    validate_config(cfg);
    ensure_out_dir(cfg);
    PreparedRun run = prepare_run(cfg);

    TrainArtifacts art;
    art.result = train(run.norm, run.data.features, run.data.graph.relation_names, run.splits, cfg);

    art.checkpoint_path = join(cfg.out_dir, "checkpoint.bin");
    art.result.params.save(art.checkpoint_path);

    art.log_path = join(cfg.out_dir, "train_log.jsonl");
    {
        std::ofstream os(art.log_path);
        if (!os) throw std::runtime_error("cannot open '" + art.log_path + "' for writing");
        for (const EpochRecord& rec : art.result.log) os << epoch_json(rec) << "\n";
    }

    RunManifest manifest;
    manifest.command = "train";
    manifest.seed = cfg.seed;
    manifest.config_digest = string_digest(canonical_config(cfg));
    manifest.inputs = input_digests(cfg);
    manifest.artifacts = {art.checkpoint_path, art.log_path};
    art.manifest_path = join(cfg.out_dir, "manifest.json");
    write_manifest(manifest, art.manifest_path);
    return art;
}

ParameterStore load_model_checkpoint(const TrainConfig& cfg, const PreparedRun& run,
                                     const std::string& checkpoint_path) {
    const int N = run.training_graph.num_nodes;
    const FeatureStore& fsx = run.data.features;
    ModelDims dims;
    dims.input_dim = fsx.one_hot() ? N : fsx.dim;
    dims.hidden_dim = cfg.hidden_dim;
    dims.embed_dim = cfg.embed_dim;
    dims.num_relations = run.training_graph.num_relations();

    int single_rel = -1;
    if (cfg.mode == TrainMode::SingleLink) {
        for (int r = 0; r < dims.num_relations; ++r)
            if (run.training_graph.relation_names[static_cast<std::size_t>(r)] == cfg.link_relation)
                single_rel = r;
        if (single_rel < 0)
            throw std::invalid_argument("unknown link relation '" + cfg.link_relation + "'");
    }

    ParameterStore params;
    auto init_rng = seeded_engine(cfg.seed, "init");
    init_model_parameters(params, dims, cfg.mode, fsx.one_hot(), init_rng, single_rel);
    register_feature_parameters(fsx, params, init_rng);
    params.load(checkpoint_path);
    return params;
}

std::string metrics_report_json(const TrainConfig& cfg, const PreparedRun& run,
                                const EvalReport& report) {
    json j;
    if (report.classification) {
        j["classification"] = {{"macro_f1", report.classification->first},
                               {"accuracy", report.classification->second}};
    }
    if (!report.links.empty()) {
        json links = json::object();
        for (const LinkMetricsRow& row : report.links)
            links[row.relation] = {{"roc_auc", row.roc_auc}, {"pr_auc", row.pr_auc}};
        j["links"] = links;
    }
    json counts = json::object();
    if (cfg.classification_active()) {
        counts["nodes"] = {{"train", run.splits.nodes.train.size()},
                           {"valid", run.splits.nodes.valid.size()},
                           {"test", run.splits.nodes.test.size()}};
    }
    if (cfg.links_active()) {
        json links = json::object();
        for (int r = 0; r < run.training_graph.num_relations(); ++r) {
            const LinkSplit& s = run.splits.links[static_cast<std::size_t>(r)];
            links[run.training_graph.relation_names[static_cast<std::size_t>(r)]] = {
                {"train", s.train.size()},
                {"valid", s.valid.size()},
                {"test", s.test.size()},
                {"eval_negatives", s.valid_negatives.size() + s.test_negatives.size()}};
        }
        counts["links"] = links;
    }
    j["counts"] = counts;
    j["provenance"] = {{"seed", cfg.seed},
                       {"config_digest", string_digest(canonical_config(cfg))},
                       {"mode", to_string(cfg.mode)}};
    return j.dump(2) + "\n";
}

std::string run_evaluate(const TrainConfig& cfg, const std::string& checkpoint_path) {
    validate_config(cfg);
    ensure_out_dir(cfg);
    PreparedRun run = prepare_run(cfg);
    ParameterStore params = load_model_checkpoint(cfg, run, checkpoint_path);
    EvalReport report = evaluate_model(run.norm, run.data.features, params,
                                       run.training_graph.relation_names, run.splits, cfg);
    std::string text = metrics_report_json(cfg, run, report);

    std::string metrics_path = join(cfg.out_dir, "metrics.json");
    write_text(metrics_path, text);

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.seed = cfg.seed;
    manifest.config_digest = string_digest(canonical_config(cfg));
    manifest.inputs = input_digests(cfg);
    manifest.inputs.emplace_back(checkpoint_path, file_digest(checkpoint_path));
    manifest.artifacts = {metrics_path};
    write_manifest(manifest, join(cfg.out_dir, "manifest.json"));
    return text;
}

PredictArtifacts run_predict(const TrainConfig& cfg, const std::string& checkpoint_path,
                             bool export_embeddings) {
    validate_config(cfg);
    ensure_out_dir(cfg);
    if (!cfg.classification_active())
        throw std::runtime_error("predict: mode '" + to_string(cfg.mode) + "' has no classifier head");
    PreparedRun run = prepare_run(cfg);
    ParameterStore params = load_model_checkpoint(cfg, run, checkpoint_path);

    ForwardPass fp = run_forward(run.norm, run.data.features, params, cfg.mode,
                                 run.training_graph.num_relations());
    const Matrix probs = fp.tape.value(class_probs(fp, params));

    PredictArtifacts art;
    art.predictions_path = join(cfg.out_dir, "predictions.tsv");
    write_predictions(art.predictions_path, run.data.graph.ids, probs);

    std::vector<std::string> artifacts{art.predictions_path};
    if (export_embeddings) {
        art.embeddings_path = join(cfg.out_dir, "embeddings.tsv");
        write_embeddings(art.embeddings_path, run.data.graph.ids, fp.tape.value(fp.enc.h));
        artifacts.push_back(art.embeddings_path);
    }

    RunManifest manifest;
    manifest.command = "predict";
    manifest.seed = cfg.seed;
    manifest.config_digest = string_digest(canonical_config(cfg));
    manifest.inputs = input_digests(cfg);
    manifest.inputs.emplace_back(checkpoint_path, file_digest(checkpoint_path));
    manifest.artifacts = artifacts;
    write_manifest(manifest, join(cfg.out_dir, "manifest.json"));
    return art;
}

ReportArtifacts run_report(const TrainConfig& cfg, const std::string& checkpoint_path,
                           bool want_lambda, bool want_geo) {
    validate_config(cfg);
    ensure_out_dir(cfg);
    PreparedRun run = prepare_run(cfg);
    ParameterStore params = load_model_checkpoint(cfg, run, checkpoint_path);

    ReportArtifacts art;
    std::vector<std::string> artifacts;

    if (want_lambda) {
        auto lambda = lambda_readout(run.norm, run.data.features, params,
                                     run.training_graph.relation_names);
        json j = json::object();
        for (const auto& [name, value] : lambda) j[name] = value;
        art.lambda_path = join(cfg.out_dir, "lambda.json");
        write_text(art.lambda_path, j.dump(2) + "\n");
        artifacts.push_back(art.lambda_path);
    }

    if (want_geo) {
        if (cfg.regions_path.empty())
            throw std::runtime_error("report: geo table requested but no region file configured");
        if (!cfg.classification_active())
            throw std::runtime_error("report: geo table needs a classifier head");
        auto regions = load_regions_file(cfg.regions_path, run.data.graph.ids);

        ForwardPass fp = run_forward(run.norm, run.data.features, params, cfg.mode,
                                     run.training_graph.num_relations());
        const Matrix& probs = fp.tape.value(class_probs(fp, params));
        std::vector<int> labels = predict_labels(probs);

        std::vector<std::pair<std::string, std::optional<int>>> entries;
        entries.reserve(regions.size());
        for (const auto& [node, region] : regions)
            entries.emplace_back(region, labels[static_cast<std::size_t>(node)]);
        auto rows = geo_aggregate(entries);

        json jrows = json::array();
        std::ostringstream table;
        table << "region\tusers\tliberal_fraction\tbin\n";
        for (const GeoRow& row : rows) {
            json r = {{"region", row.region}, {"users", row.users}};
            table << row.region << '\t' << row.users << '\t';
            if (row.bin) {
                r["liberal_fraction"] = row.fraction;
                r["bin"] = *row.bin;
                table << row.fraction << '\t' << *row.bin << '\n';
            } else {
                table << "-\t-\n";
            }
            jrows.push_back(r);
        }
        art.geo_path = join(cfg.out_dir, "geo.json");
        write_text(art.geo_path, jrows.dump(2) + "\n");
        std::string geo_tsv = join(cfg.out_dir, "geo.tsv");
        write_text(geo_tsv, table.str());
        artifacts.push_back(art.geo_path);
        artifacts.push_back(geo_tsv);
    }

    RunManifest manifest;
    manifest.command = "report";
    manifest.seed = cfg.seed;
    manifest.config_digest = string_digest(canonical_config(cfg));
    manifest.inputs = input_digests(cfg);
    manifest.inputs.emplace_back(checkpoint_path, file_digest(checkpoint_path));
    manifest.artifacts = artifacts;
    write_manifest(manifest, join(cfg.out_dir, "manifest.json"));
    return art;
}

CrossRelArtifacts run_crossrel(const TrainConfig& cfg) {
    ensure_out_dir(cfg);
    TrainConfig prep_cfg = cfg;
    prep_cfg.mode = TrainMode::SingleLink;  // link splits only; per-row configs set the relation
    PreparedRun run;
    run.data = load_inputs(prep_cfg);
    run.splits = prepare_splits(run.data.graph, run.data.labeled, prep_cfg);
    run.training_graph = make_training_graph(run.data.graph, run.splits, prep_cfg);

    CrossRelArtifacts art;
    art.result = cross_relation_matrix(run.training_graph, run.data.features, run.splits, prep_cfg);

    json j;
    j["relations"] = art.result.names;
    json rows = json::array();
    for (Eigen::Index i = 0; i < art.result.table.rows(); ++i)
        rows.push_back(matrix_row(art.result.table, i));
    j["roc_auc"] = rows;
    art.json_path = join(cfg.out_dir, "crossrel.json");
    write_text(art.json_path, j.dump(2) + "\n");
    art.text_path = join(cfg.out_dir, "crossrel.txt");
    write_text(art.text_path, art.result.to_text());

    RunManifest manifest;
    manifest.command = "crossrel";
    manifest.seed = cfg.seed;
    manifest.config_digest = string_digest(canonical_config(cfg));
    manifest.inputs = input_digests(cfg);
    manifest.artifacts = {art.json_path, art.text_path};
    write_manifest(manifest, join(cfg.out_dir, "manifest.json"));
    return art;
}

FilterArtifacts run_filter(const FilterOptions& opts) {
    require(!opts.out_dir.empty(), "filter: out_dir required");
    require(!opts.seeds_path.empty(), "filter: seed file required");
    require(!opts.counts_path.empty(), "filter: count file required");
    fs::create_directories(opts.out_dir);

    RelGraph g = load_edge_lists(opts.edge_paths, opts.node_map_path, opts.seeds_path);
    auto counts = load_counts_file(opts.counts_path, g.ids);
    ThresholdRange range = ThresholdRange::parse(opts.range_text);
    SubgroupResult result = filter_subgroup(g, counts, range);

    FilterArtifacts art;
    art.kept_nodes = result.graph.num_nodes;
    art.node_map_path = join(opts.out_dir, "nodes.tsv");
    write_node_map(art.node_map_path, result.graph.ids);
    art.seeds_path = join(opts.out_dir, "seeds.tsv");
    write_seed_file(art.seeds_path, result.graph);
    for (int r = 0; r < result.graph.num_relations(); ++r) {
        std::string path = join(opts.out_dir, result.graph.relation_names[static_cast<std::size_t>(r)] + ".tsv");
        write_edge_list(path, result.graph, r);
        art.edge_paths.push_back(path);
    }
    return art;
}

}  // namespace timme
