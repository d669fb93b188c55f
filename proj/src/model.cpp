#include "timme/model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace timme {

std::string to_string(TrainMode m) {
    switch (m) {
        case TrainMode::SingleClass: return "single_class";
        case TrainMode::SingleLink: return "single_link";
        case TrainMode::Timme: return "timme";
        case TrainMode::Hierarchical: return "hierarchical";
    }
    return "?";
}

std::pair<TrainMode, std::string> parse_mode(const std::string& text) {
    if (text == "single_class") return {TrainMode::SingleClass, ""};
    if (text == "timme") return {TrainMode::Timme, ""};
    if (text == "hierarchical") return {TrainMode::Hierarchical, ""};
    if (text == "single_link") return {TrainMode::SingleLink, ""};
    if (text.rfind("single_link(", 0) == 0 && text.back() == ')')
        return {TrainMode::SingleLink, text.substr(12, text.size() - 13)};
    throw std::invalid_argument("unknown mode '" + text +
                                "' (expected single_class, single_link(<relation>), timme, hierarchical)");
}

std::string encoder_weight_name(int layer, int branch) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "encoder/l%d/w%02d", layer, branch);
    return buf;
}

std::string ntn_param_name(int relation, const char* field) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "ntn/r%02d/%s", relation, field);
    return buf;
}

std::string task_map_name(int relation) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "taskmap/r%02d", relation);
    return buf;
}

void init_model_parameters(ParameterStore& params, const ModelDims& dims, TrainMode mode,
                           bool one_hot_input, std::mt19937_64& rng,
                           int single_link_relation) {
    const int branches = 2 * dims.num_relations + 1;
    const int d0 = dims.input_dim;
    const int d1 = dims.hidden_dim;
    const int d2 = dims.embed_dim;
    (void)one_hot_input;  // layer-0 weights are d0 x d1 either way; one-hot sets d0 = N

    for (int b = 0; b < branches; ++b) {
        params.add(encoder_weight_name(0, b), glorot_uniform(d0, d1, rng));
        params.add(encoder_weight_name(1, b), glorot_uniform(d1, d2, rng));
    }

    const bool classification = mode != TrainMode::SingleLink;
    const bool links = mode != TrainMode::SingleClass;
    if (classification) {
        params.add(kClassifierWeight, glorot_uniform(d2, 2, rng));
        params.add(kClassifierBias, Matrix::Zero(1, 2));
    }
    if (links) {
        for (int r = 0; r < dims.num_relations; ++r) {
            if (mode == TrainMode::SingleLink && r != single_link_relation) continue;
            params.add(ntn_param_name(r, "diag_w"), glorot_uniform(1, d2, rng));
            params.add(ntn_param_name(r, "v"), glorot_uniform(1, 2 * d2, rng));
            params.add(ntn_param_name(r, "bias"), Matrix::Zero(1, 1));
        }
    }
    if (mode == TrainMode::Hierarchical) {
        for (int r = 0; r < dims.num_relations; ++r)
            params.add(task_map_name(r), glorot_uniform(d2, d2, rng));
    }
}

Var relation_attention(Tape& t, Var stacked) {
    const Eigen::Index d = t.value(stacked).cols();
    Var qk = matmul(t, stacked, transpose(t, stacked));
    Var scaled = scale(t, qk, 1.0 / std::sqrt(static_cast<double>(d)));
    return softmax_rows(t, col_sums(t, scaled));
}

Var attend_branches(Tape& t, const std::vector<Var>& branches) {
    std::vector<Var> pooled;
    pooled.reserve(branches.size());
    for (Var b : branches) pooled.push_back(mean_rows(t, b));
    return relation_attention(t, stack_rows(t, pooled));
}

LayerOut encoder_layer(Tape& t, std::optional<Var> input, const NormalizedRelationSet& norm,
                       const ParameterStore& params, int layer) {
    std::vector<Var> branches;
    branches.reserve(static_cast<std::size_t>(norm.size()));
    for (int b = 0; b < norm.size(); ++b) {
        Var w = params.use(t, encoder_weight_name(layer, b));
        Var out = input ? spmm(t, norm.matrices[static_cast<std::size_t>(b)], matmul(t, *input, w))
                        : spmm(t, norm.matrices[static_cast<std::size_t>(b)], w);
        branches.push_back(out);
    }
    Var alpha = attend_branches(t, branches);
    return LayerOut{relu(t, weighted_sum(t, branches, alpha)), alpha};
}

EncodeOut encode(Tape& t, const NormalizedRelationSet& norm, const FeatureStore& fs,
                 const ParameterStore& params, bool force_materialize,
                 double dropout_rate, std::mt19937_64* dropout_rng) {
    std::optional<Var> h0;
    if (!fs.one_hot() || force_materialize) h0 = materialize(t, fs, params);

    LayerOut l0 = encoder_layer(t, h0, norm, params, 0);
    Var h1 = l0.h;
    if (dropout_rate > 0.0) {
        if (!dropout_rng) throw std::invalid_argument("encode: dropout needs an rng");
        const Matrix& v = t.value(h1);
        std::bernoulli_distribution keep(1.0 - dropout_rate);
        Matrix mask(v.rows(), v.cols());
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            for (Eigen::Index j = 0; j < v.cols(); ++j)
                mask(i, j) = keep(*dropout_rng) ? 1.0 / (1.0 - dropout_rate) : 0.0;
        h1 = dropout_mask(t, h1, std::move(mask));
    }
    LayerOut l1 = encoder_layer(t, h1, norm, params, 1);
    return EncodeOut{l1.h, {l0.alpha, l1.alpha}};
}

Var classify(Tape& t, Var h, const ParameterStore& params) {
    Var logits = add_row(t, matmul(t, h, params.use(t, kClassifierWeight)),
                         params.use(t, kClassifierBias));
    return softmax_rows(t, logits);
}

std::vector<int> predict_labels(const Matrix& probs) {
    std::vector<int> out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        out[static_cast<std::size_t>(i)] = probs(i, 1) > probs(i, 0) ? 1 : 0;
    return out;
}

Var score_links(Tape& t, Var embeddings, int relation, const ParameterStore& params,
                const std::vector<Edge>& pairs) {
    if (relation < 0 || !params.has(ntn_param_name(relation, "diag_w")))
        throw std::out_of_range("score_links: relation id " + std::to_string(relation) +
                                " has no link head");
    Var dw = params.use(t, ntn_param_name(relation, "diag_w"));
    Var v = params.use(t, ntn_param_name(relation, "v"));
    Var b = params.use(t, ntn_param_name(relation, "bias"));
    return ntn_scores(t, embeddings, dw, v, b, pairs);
}

HierarchicalOut hierarchical_forward(Tape& t, Var h, const ParameterStore& params, int num_relations) {
    if (num_relations < 1) throw std::invalid_argument("hierarchical_forward: need R >= 1");
    HierarchicalOut out;
    out.task_embeddings.reserve(static_cast<std::size_t>(num_relations));
    for (int r = 0; r < num_relations; ++r)
        out.task_embeddings.push_back(matmul(t, h, params.use(t, task_map_name(r))));
    out.lambda = attend_branches(t, out.task_embeddings);
    out.combined = weighted_sum(t, out.task_embeddings, out.lambda);
    out.probs = classify(t, out.combined, params);
    return out;
}

std::vector<std::pair<std::string, double>> lambda_readout(
    const NormalizedRelationSet& norm, const FeatureStore& fs, const ParameterStore& params,
    const std::vector<std::string>& relation_names) {
    const int R = static_cast<int>(relation_names.size());
    if (R < 1 || !params.has(task_map_name(0)))
        throw std::runtime_error("lambda_readout: model has no hierarchical task maps");
    Tape t;
    EncodeOut enc = encode(t, norm, fs, params);
    HierarchicalOut hier = hierarchical_forward(t, enc.h, params, R);
    const Matrix& lam = t.value(hier.lambda);
    std::vector<std::pair<std::string, double>> out;
    for (int r = 0; r < R; ++r)
        out.emplace_back(relation_names[static_cast<std::size_t>(r)], lam(0, r));
    return out;
}

}  // namespace timme
