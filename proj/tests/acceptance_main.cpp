// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line each. Exit code 0 iff nothing failed (skips are allowed).

#include "oracles.hpp"
#include "timme/generator.hpp"
#include "timme/manifest.hpp"
#include "timme/pipeline.hpp"
#include "timme/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace timme;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << what;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++failures;
}

void skip(int id, const std::string& what, const std::string& why) {
    std::cout << "[SKIP] criterion " << id << ": " << what << " (" << why << ")" << std::endl;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
}

RelGraph random_graph(int n, int relations, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<EdgeSet> rels(static_cast<std::size_t>(relations));
    for (auto& edges : rels)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && u(rng) < density) edges.emplace_back(i, j);
    return make_graph(n, rels);
}

// --------------------------------------------------------------------------
// 1. Gradient correctness on the N=12, R=2, d=5 joint loss.
void criterion_gradients() {
    auto start = Clock::now();
    std::mt19937_64 rng(13);
    RelGraph g = random_graph(12, 2, 0.25, rng);
    LabeledSet labeled;
    for (int k = 0; k < 10; ++k) {
        labeled.nodes.push_back(k);
        labeled.labels.push_back(k % 2);
    }

    TrainConfig cfg;
    cfg.mode = TrainMode::Timme;
    cfg.seed = 17;
    cfg.hidden_dim = 5;
    cfg.embed_dim = 5;
    TaskSplits splits = prepare_splits(g, labeled, cfg);
    NormalizedRelationSet norm = build_normalized_set(make_training_graph(g, splits, cfg));
    FeatureStore fsx = one_hot_features(12);

    ModelDims dims{12, 5, 5, 2};
    ParameterStore params;
    auto init_rng = seeded_engine(cfg.seed, "init");
    init_model_parameters(params, dims, cfg.mode, true, init_rng);

    std::vector<EdgeSet> batches, negatives;
    auto neg_rng = seeded_engine(cfg.seed, "acc_negs");
    for (int r = 0; r < 2; ++r) {
        const LinkSplit& s = splits.links[static_cast<std::size_t>(r)];
        batches.push_back(s.train);
        std::set<Edge> exclusion;
        for (const Edge& e : g.edges(r)) exclusion.insert(e);
        negatives.push_back(sample_negative_links(12, s.train.size(), exclusion, neg_rng));
    }
    auto build = [&](Tape& t, const ParameterStore& ps) {
        EncodeOut enc = encode(t, norm, fsx, ps);
        Var probs = classify(t, enc.h, ps);
        Var loss = cross_entropy_rows(t, probs, splits.nodes.train.nodes, splits.nodes.train.labels);
        for (int r = 0; r < 2; ++r) {
            EdgeSet pairs = batches[static_cast<std::size_t>(r)];
            pairs.insert(pairs.end(), negatives[static_cast<std::size_t>(r)].begin(),
                         negatives[static_cast<std::size_t>(r)].end());
            std::vector<double> labels(batches[static_cast<std::size_t>(r)].size(), 1.0);
            labels.resize(pairs.size(), 0.0);
            loss = add(t, loss, sigmoid_bce_sum(t, score_links(t, enc.h, r, ps, pairs), labels));
        }
        return loss;
    };
    auto forward = [&](ParameterStore& ps) {
        Tape t;
        return t.value(build(t, ps))(0, 0);
    };
    auto gradient = [&](ParameterStore& ps) {
        Tape t;
        return t.backward(build(t, ps));
    };
    FiniteDiffReport rep = finite_difference_check(forward, gradient, params, 1e-5, 1e-4, 250, 99);
    double elapsed = seconds_since(start);
    report(1, rep.pass && rep.coords_checked >= 200 && elapsed < 60.0,
           "autodiff matches central finite differences on the joint loss",
           "max rel err " + fmt(rep.max_rel_error) + " over " + std::to_string(rep.coords_checked) +
               " coords, " + fmt(elapsed) + "s");
}

// --------------------------------------------------------------------------
// 2. One-hot shortcut vs explicit identity features on 20 random instances.
void criterion_onehot_equivalence() {
    std::mt19937_64 seeds(99);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::mt19937_64 rng(seeds());
        int n = 5 + static_cast<int>(rng() % 10);
        int R = 1 + static_cast<int>(rng() % 3);
        RelGraph g = random_graph(n, R, 0.3, rng);
        NormalizedRelationSet norm = build_normalized_set(g);
        FeatureStore fsx = one_hot_features(n);
        ModelDims dims{n, 6, 4, R};
        ParameterStore params;
        auto init_rng = seeded_engine(rng(), "init");
        init_model_parameters(params, dims, TrainMode::SingleClass, true, init_rng);

        Tape t1, t2;
        Matrix shortcut = t1.value(encode(t1, norm, fsx, params, false).h);
        Matrix explicit_path = t2.value(encode(t2, norm, fsx, params, true).h);
        worst = std::max(worst, (shortcut - explicit_path).cwiseAbs().maxCoeff());
    }
    report(2, worst <= 1e-12, "one-hot shortcut equals explicit identity features",
           "max deviation " + fmt(worst) + " over 20 instances");
}

// --------------------------------------------------------------------------
// Shared fixture state for criteria 3-8.
struct FixtureRuns {
    std::string dir;
    TrainConfig base;
    TrainArtifacts single_run;
    TrainArtifacts joint_run;
    TrainArtifacts hier_run;
    std::string single_metrics;
    std::string joint_metrics;
    double elapsed_classification{0.0};
};

FixtureRuns run_fixture() {
    FixtureRuns fx;
    fx.dir = (fs::temp_directory_path() / "timme_acceptance").string();
    fs::remove_all(fx.dir);

    GeneratorConfig gen;
    gen.n = 200;
    gen.blocks = 2;
    gen.relations = 3;
    gen.intra_p = 0.05;
    gen.inter_p = 0.005;
    gen.label_fraction = 0.1;
    gen.seed = 1;
    gen.out_dir = fx.dir + "/fixture";
    GeneratedFiles files = generate_fixture(gen);

    fx.base = load_config_file(files.config);
    fx.base.seed = 1;

    auto start = Clock::now();
    TrainConfig single = fx.base;
    single.mode = TrainMode::SingleClass;
    single.out_dir = fx.dir + "/single";
    fx.single_run = run_train(single);
    fx.single_metrics = run_evaluate(single, fx.single_run.checkpoint_path);

    TrainConfig joint = fx.base;
    joint.mode = TrainMode::Timme;
    joint.out_dir = fx.dir + "/joint";
    fx.joint_run = run_train(joint);
    fx.joint_metrics = run_evaluate(joint, fx.joint_run.checkpoint_path);
    fx.elapsed_classification = seconds_since(start);

    TrainConfig hier = fx.base;
    hier.mode = TrainMode::Hierarchical;
    hier.out_dir = fx.dir + "/hier";
    fx.hier_run = run_train(hier);
    return fx;
}

double accuracy_of(const std::string& text) {
    return nlohmann::json::parse(text).at("classification").at("accuracy").get<double>();
}

double link_number(const std::string& text, const std::string& relation, const std::string& key) {
    return nlohmann::json::parse(text).at("links").at(relation).at(key).get<double>();
}

// 3. Simplex invariants for every alpha and lambda of every epoch.
void criterion_simplex(const FixtureRuns& fx) {
    double worst_sum = 0.0;
    double min_entry = 1.0;
    std::size_t vectors = 0;
    auto check_vec = [&](const std::vector<double>& v) {
        double sum = 0.0;
        for (double x : v) {
            sum += x;
            min_entry = std::min(min_entry, x);
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        ++vectors;
    };
    for (const TrainArtifacts* run : {&fx.single_run, &fx.joint_run, &fx.hier_run})
        for (const EpochRecord& rec : run->result.log) {
            for (const auto& alpha : rec.alphas) check_vec(alpha);
            if (!rec.lambda.empty()) check_vec(rec.lambda);
        }
    bool pass = worst_sum <= 1e-9 && min_entry > 0.0 && vectors > 0;
    report(3, pass, "alpha and lambda stay on the simplex every epoch",
           std::to_string(vectors) + " vectors, worst |sum-1| " + fmt(worst_sum) + ", min entry " +
               fmt(min_entry));
}

// 4. Planted-partition learning.
void criterion_classification(const FixtureRuns& fx) {
    double acc_single = accuracy_of(fx.single_metrics);
    double acc_joint = accuracy_of(fx.joint_metrics);
    bool pass = acc_single >= 0.90 && acc_joint >= acc_single - 0.02 &&
                fx.elapsed_classification < 300.0;
    report(4, pass, "planted labels recovered by single and joint training",
           "single " + fmt(acc_single) + ", joint " + fmt(acc_joint) + ", " +
               fmt(fx.elapsed_classification) + "s");
}

// 5. Link prediction quality of the joint model.
void criterion_links(const FixtureRuns& fx) {
    bool pass = true;
    std::string detail;
    for (const std::string& rel : {"rel0", "rel1", "rel2"}) {
        double roc = link_number(fx.joint_metrics, rel, "roc_auc");
        double pr = link_number(fx.joint_metrics, rel, "pr_auc");
        pass = pass && roc >= 0.85 && pr >= 0.80;
        detail += rel + " roc " + fmt(roc) + " pr " + fmt(pr) + "; ";
    }
    report(5, pass, "joint model clears the link-prediction bars", detail);
}

// 6. Leakage: no held-out positive in any training matrix.
void criterion_leakage(const FixtureRuns& fx) {
    TrainConfig joint = fx.base;
    joint.mode = TrainMode::Timme;
    joint.out_dir = fx.dir + "/leakcheck";
    PreparedRun run = prepare_run(joint);

    std::size_t checked = 0, leaked = 0;
    const int R = run.training_graph.num_relations();
    for (int r = 0; r < R; ++r) {
        const LinkSplit& s = run.splits.links[static_cast<std::size_t>(r)];
        EdgeSet held = s.valid;
        held.insert(held.end(), s.test.begin(), s.test.end());
        for (const Edge& e : held) {
            ++checked;
            // Forward matrices carry (i,j); reverse matrices carry (j,i).
            for (int q = 0; q < R; ++q)
                if (run.training_graph.has_edge(q, e.first, e.second)) ++leaked;
            for (int m = 0; m < run.norm.size(); ++m) {
                const RelationTag& tag = run.norm.tags[static_cast<std::size_t>(m)];
                if (tag.kind == RelationKind::Identity) continue;
                int i = tag.kind == RelationKind::Forward ? e.first : e.second;
                int j = tag.kind == RelationKind::Forward ? e.second : e.first;
                if (run.norm.matrices[static_cast<std::size_t>(m)].coeff(i, j) != 0.0) ++leaked;
            }
        }
    }
    report(6, leaked == 0 && checked > 0, "held-out positives absent from all training matrices",
           std::to_string(checked) + " held-out pairs checked, " + std::to_string(leaked) + " leaks");
}

// 7. Joint loss equals the sum of logged per-task losses at every step.
void criterion_additivity(const FixtureRuns& fx) {
    double worst = 0.0;
    std::size_t steps = 0;
    for (const TrainArtifacts* run : {&fx.single_run, &fx.joint_run, &fx.hier_run})
        for (const EpochRecord& rec : run->result.log) {
            double sum = rec.loss_class.value_or(0.0);
            for (const auto& [name, value] : rec.link_losses) sum += value;
            worst = std::max(worst, std::abs(sum - rec.loss_total));
            ++steps;
        }
    report(7, worst <= 1e-6 && steps > 0, "logged joint loss equals the sum of task losses",
           std::to_string(steps) + " steps, worst gap " + fmt(worst));
}

// 8. Determinism: identical config and seed give byte-identical metrics JSON.
void criterion_determinism(const FixtureRuns& fx) {
    TrainConfig cfg = fx.base;
    cfg.mode = TrainMode::Timme;
    cfg.epochs = 40;
    cfg.out_dir = fx.dir + "/det";

    TrainArtifacts a = run_train(cfg);
    std::string metrics_a = run_evaluate(cfg, a.checkpoint_path);
    std::ifstream c1(a.checkpoint_path, std::ios::binary);
    std::stringstream ckpt_a;
    ckpt_a << c1.rdbuf();
    c1.close();

    TrainArtifacts b = run_train(cfg);
    std::string metrics_b = run_evaluate(cfg, b.checkpoint_path);
    std::ifstream c2(b.checkpoint_path, std::ios::binary);
    std::stringstream ckpt_b;
    ckpt_b << c2.rdbuf();

    bool same_metrics = metrics_a == metrics_b;
    bool same_ckpt = ckpt_a.str() == ckpt_b.str();
    report(8, same_metrics && same_ckpt,
           "fixed seed reproduces metrics and checkpoints byte-identically",
           std::string("metrics json ") + (same_metrics ? "equal" : "differ") + ", checkpoints " +
               (same_ckpt ? "equal" : "differ"));
}

// --------------------------------------------------------------------------
// 9. NTN direction property.
void criterion_ntn_direction() {
    std::mt19937_64 rng(31);
    const int d = 8;
    Matrix h = random_matrix(40, d, rng, 2.0);
    Matrix dw = random_matrix(1, d, rng);
    Matrix b = random_matrix(1, 1, rng);

    Tape t;
    Var hv = t.constant(h);
    Var dwv = t.constant(dw);
    Var zero_v = t.constant(Matrix::Zero(1, 2 * d));
    Var bv = t.constant(b);

    std::uniform_int_distribution<int> pick(0, 39);
    std::size_t symmetric = 0;
    for (int k = 0; k < 1000; ++k) {
        int i = pick(rng), j = pick(rng);
        double fwd = t.value(ntn_scores(t, hv, dwv, zero_v, bv, {{i, j}}))(0, 0);
        double rev = t.value(ntn_scores(t, hv, dwv, zero_v, bv, {{j, i}}))(0, 0);
        if (fwd == rev) ++symmetric;  // exact equality required
    }

    Var rand_v = t.constant(random_matrix(1, 2 * d, rng));
    double max_gap = 0.0;
    for (int k = 0; k < 1000; ++k) {
        int i = pick(rng), j = pick(rng);
        if (i == j) continue;
        double fwd = t.value(ntn_scores(t, hv, dwv, rand_v, bv, {{i, j}}))(0, 0);
        double rev = t.value(ntn_scores(t, hv, dwv, rand_v, bv, {{j, i}}))(0, 0);
        max_gap = std::max(max_gap, std::abs(fwd - rev));
    }
    report(9, symmetric == 1000 && max_gap > 1e-6,
           "direction awareness lives entirely in the v term",
           "1000/" + std::to_string(symmetric) + " exact symmetric, max asymmetry " + fmt(max_gap));
}

// 10. Metric oracles.
void criterion_metric_oracles() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> len(2, 50);

    double worst_roc = 0.0, worst_f1 = 0.0;
    int done = 0;
    while (done < 100) {
        int n = len(rng);
        std::vector<double> scores;
        std::vector<int> labels, pred, truth;
        bool pos = false, neg = false;
        for (int k = 0; k < n; ++k) {
            scores.push_back(std::round(u(rng) * 8.0) / 8.0);
            labels.push_back(coin(rng));
            (labels.back() ? pos : neg) = true;
            pred.push_back(coin(rng));
            truth.push_back(coin(rng));
        }
        if (!pos || !neg) continue;
        ++done;
        auto [roc, pr] = link_metrics(scores, labels);
        (void)pr;
        worst_roc = std::max(worst_roc, std::abs(roc - oracles::roc_auc_by_pairs(scores, labels)));
        auto [f1, acc] = classification_metrics(pred, truth);
        (void)acc;
        worst_f1 = std::max(worst_f1, std::abs(f1 - oracles::macro_f1_by_confusion(pred, truth)));
    }
    report(10, worst_roc <= 1e-12 && worst_f1 <= 1e-12,
           "roc-auc and macro-f1 match their brute-force oracles",
           "worst roc gap " + fmt(worst_roc) + ", worst f1 gap " + fmt(worst_f1));
}

// 11. Optional external-data check against the released PureP subset.
void criterion_purep() {
    const char* dir = std::getenv("TIMME_PUREP_DIR");
    if (!dir || !fs::exists(fs::path(dir) / "nodes.tsv")) {
        skip(11, "PureP single-task classification F1 >= 0.98",
             "set TIMME_PUREP_DIR to a directory with nodes.tsv, labels.tsv and edge lists");
        return;
    }
    TrainConfig cfg;
    for (const char* rel : {"follow", "retweet", "like", "mention", "reply"}) {
        fs::path p = fs::path(dir) / (std::string(rel) + ".tsv");
        if (fs::exists(p)) cfg.edge_paths.push_back(p.string());
    }
    cfg.node_map_path = (fs::path(dir) / "nodes.tsv").string();
    cfg.labels_path = (fs::path(dir) / "labels.tsv").string();
    cfg.mode = TrainMode::SingleClass;
    cfg.seed = 1;
    cfg.out_dir = (fs::temp_directory_path() / "timme_purep").string();

    TrainArtifacts art = run_train(cfg);
    std::string metrics = run_evaluate(cfg, art.checkpoint_path);
    double f1 = nlohmann::json::parse(metrics).at("classification").at("macro_f1").get<double>();
    report(11, f1 >= 0.98, "PureP single-task classification", "macro-f1 " + fmt(f1));
}

}  // namespace

int main() {
    std::cout << "acceptance suite" << std::endl;
    try {
        criterion_gradients();
        criterion_onehot_equivalence();
        FixtureRuns fx = run_fixture();
        criterion_simplex(fx);
        criterion_classification(fx);
        criterion_links(fx);
        criterion_leakage(fx);
        criterion_additivity(fx);
        criterion_determinism(fx);
        criterion_ntn_direction();
        criterion_metric_oracles();
        criterion_purep();
        fs::remove_all(fx.dir);
    } catch (const std::exception& e) {
        std::cout << "[FAIL] acceptance aborted: " << e.what() << std::endl;
        return 2;
    }
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
