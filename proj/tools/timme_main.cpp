#include "timme/config.hpp"
#include "timme/generator.hpp"
#include "timme/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace {

struct CommonFlags {
    std::string config_path;
    std::string mode;
    std::string out_dir;
    std::string relations;
    std::string seed;
    std::string epochs;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "config file (key = value lines)");
    if (config_required) opt->required();
    cmd->add_option("--seed", flags.seed, "master seed (overrides config)");
    cmd->add_option("--mode", flags.mode,
                    "single_class | single_link(<relation>) | timme | hierarchical");
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd->add_option("--relations", flags.relations, "comma-separated relation names");
    cmd->add_option("--epochs", flags.epochs, "training epochs (overrides config)");
}

timme::TrainConfig resolve_config(const CommonFlags& flags) {
    timme::TrainConfig cfg;
    if (!flags.config_path.empty()) cfg = timme::load_config_file(flags.config_path);
    // Flag overrides beat file values beat defaults.
    if (!flags.seed.empty()) timme::apply_config_entry(cfg, "seed", flags.seed);
    if (!flags.mode.empty()) timme::apply_config_entry(cfg, "mode", flags.mode);
    if (!flags.out_dir.empty()) timme::apply_config_entry(cfg, "out_dir", flags.out_dir);
    if (!flags.relations.empty()) timme::apply_config_entry(cfg, "relation_names", flags.relations);
    if (!flags.epochs.empty()) timme::apply_config_entry(cfg, "epochs", flags.epochs);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-relational graph embedding engine"};
    app.require_subcommand(1);

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "write a synthetic planted-partition fixture");
    timme::GeneratorConfig gen;
    gen_cmd->add_option("--n", gen.n, "number of nodes");
    gen_cmd->add_option("--blocks", gen.blocks, "number of planted blocks");
    gen_cmd->add_option("--relations", gen.relations, "number of relations");
    gen_cmd->add_option("--intra", gen.intra_p, "within-block edge probability");
    gen_cmd->add_option("--inter", gen.inter_p, "cross-block edge probability");
    gen_cmd->add_option("--label-fraction", gen.label_fraction, "fraction of labeled nodes");
    gen_cmd->add_option("--hub-sigma", gen.hub_sigma, "node-propensity lognormal sigma (0 = homogeneous)");
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();

    // train / evaluate / predict / report / crossrel
    CommonFlags train_flags, eval_flags, predict_flags, report_flags, crossrel_flags;
    auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoint + log");
    add_common(train_cmd, train_flags, true);

    auto* eval_cmd = app.add_subcommand("evaluate", "test-split metrics for a checkpoint");
    add_common(eval_cmd, eval_flags, true);
    std::string eval_ckpt;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();

    auto* predict_cmd = app.add_subcommand("predict", "per-node ideology probabilities");
    add_common(predict_cmd, predict_flags, true);
    std::string predict_ckpt;
    bool predict_embeddings = false;
    predict_cmd->add_option("--checkpoint", predict_ckpt, "checkpoint file")->required();
    predict_cmd->add_flag("--embeddings", predict_embeddings, "also export encoder embeddings");

    auto* report_cmd = app.add_subcommand("report", "lambda readout and geography table");
    add_common(report_cmd, report_flags, true);
    std::string report_ckpt;
    bool report_lambda = false, report_geo = false;
    report_cmd->add_option("--checkpoint", report_ckpt, "checkpoint file")->required();
    report_cmd->add_flag("--lambda", report_lambda, "emit relation-importance lambda (hierarchical)");
    report_cmd->add_flag("--geo", report_geo, "emit per-region ideology table");

    auto* crossrel_cmd = app.add_subcommand("crossrel", "cross-relation transfer matrix");
    add_common(crossrel_cmd, crossrel_flags, true);

    // filter
    auto* filter_cmd = app.add_subcommand("filter", "threshold-based subgroup selection");
    timme::FilterOptions filter;
    std::string filter_edges;
    filter_cmd->add_option("--edges", filter_edges, "comma-separated edge-list files")->required();
    filter_cmd->add_option("--node-map", filter.node_map_path, "node map file")->required();
    filter_cmd->add_option("--seeds", filter.seeds_path, "seed-node file")->required();
    filter_cmd->add_option("--counts", filter.counts_path, "per-node count file (id\\tt1\\tt2)")->required();
    filter_cmd->add_option("--range", filter.range_text, "threshold range, e.g. \"[50,inf)\" or \"{inf}\"")
        ->required();
    filter_cmd->add_option("--out", filter.out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) {
            auto files = timme::generate_fixture(gen);
            std::cout << "fixture written to " << gen.out_dir << " (" << files.edge_paths.size()
                      << " relations)\n"
                      << "config: " << files.config << "\n";
        } else if (*train_cmd) {
            auto cfg = resolve_config(train_flags);
            auto art = timme::run_train(cfg);
            const auto& best = art.result.log.at(static_cast<std::size_t>(art.result.best_epoch));
            std::cout << "trained " << timme::to_string(cfg.mode) << " for " << art.result.log.size()
                      << " epochs; best epoch " << art.result.best_epoch << " (selection metric "
                      << best.selection_metric << ")\n"
                      << "checkpoint: " << art.checkpoint_path << "\n"
                      << "log:        " << art.log_path << "\n";
        } else if (*eval_cmd) {
            auto cfg = resolve_config(eval_flags);
            std::cout << timme::run_evaluate(cfg, eval_ckpt);
        } else if (*predict_cmd) {
            auto cfg = resolve_config(predict_flags);
            auto art = timme::run_predict(cfg, predict_ckpt, predict_embeddings);
            std::cout << "predictions: " << art.predictions_path << "\n";
            if (!art.embeddings_path.empty()) std::cout << "embeddings: " << art.embeddings_path << "\n";
        } else if (*report_cmd) {
            auto cfg = resolve_config(report_flags);
            if (!report_lambda && !report_geo) {
                report_lambda = cfg.mode == timme::TrainMode::Hierarchical;
                report_geo = !cfg.regions_path.empty();
            }
            auto art = timme::run_report(cfg, report_ckpt, report_lambda, report_geo);
            if (!art.lambda_path.empty()) std::cout << "lambda: " << art.lambda_path << "\n";
            if (!art.geo_path.empty()) std::cout << "geo: " << art.geo_path << "\n";
        } else if (*crossrel_cmd) {
            auto cfg = resolve_config(crossrel_flags);
            auto art = timme::run_crossrel(cfg);
            std::cout << art.result.to_text() << "table: " << art.json_path << "\n";
        } else if (*filter_cmd) {
            std::stringstream ss(filter_edges);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) filter.edge_paths.push_back(tok);
            auto art = timme::run_filter(filter);
            std::cout << "kept " << art.kept_nodes << " nodes\n"
                      << "node map: " << art.node_map_path << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
