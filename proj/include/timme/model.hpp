#ifndef TIMME_MODEL_HPP
#define TIMME_MODEL_HPP

#include "timme/features.hpp"
#include "timme/graph.hpp"
#include "timme/param_store.hpp"
#include "timme/tape.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace timme {

enum class TrainMode { SingleClass, SingleLink, Timme, Hierarchical };

std::string to_string(TrainMode m);
/// Accepts "single_class", "single_link(<relation>)", "timme",
/// "hierarchical". Returns the mode and, for single_link, the relation name.
std::pair<TrainMode, std::string> parse_mode(const std::string& text);

struct ModelDims {
    int input_dim{0};   // d^(0): N in one-hot mode, feature dim otherwise
    int hidden_dim{100};
    int embed_dim{100};
    int num_relations{0};
};

// Parameter slot naming. Two-digit branch indices keep lexicographic order
// equal to branch order for up to 50 relations.
std::string encoder_weight_name(int layer, int branch);
std::string ntn_param_name(int relation, const char* field);
std::string task_map_name(int relation);
inline const char* kClassifierWeight = "classifier/weight";
inline const char* kClassifierBias = "classifier/bias";

/// Registers every parameter the given mode trains: encoder weights always,
/// classifier head and NTN heads per mode, task maps in hierarchical mode.
/// In single_link mode only the target relation's link head exists;
/// `single_link_relation` is ignored otherwise.
void init_model_parameters(ParameterStore& params, const ModelDims& dims, TrainMode mode,
                           bool one_hot_input, std::mt19937_64& rng,
                           int single_link_relation = -1);

/// Scaled dot-product self-attention weights over the rows of `stacked`
/// (one mean-pooled relation output per row):
/// alpha = softmax(col_sums(S S^T / sqrt(d))), a 1xK simplex vector.
Var relation_attention(Tape& t, Var stacked);

/// Pools each branch over nodes, stacks, and attends; returns alpha (1xK).
Var attend_branches(Tape& t, const std::vector<Var>& branches);

/// One propagation layer: relu(sum_r alpha_r A_r H W_r). When `input` is
/// absent the layer runs in the one-hot shortcut form A_r W_r, which is
/// algebraically H^(0) = I. Returns the layer output and its alpha.
struct LayerOut {
    Var h;
    Var alpha;
};
LayerOut encoder_layer(Tape& t, std::optional<Var> input, const NormalizedRelationSet& norm,
                       const ParameterStore& params, int layer);

/// Full two-layer encoder. `force_materialize` routes one-hot input through
/// an explicit identity matrix instead of the shortcut (equivalence checks).
/// Optional dropout is applied to the first layer's output using the given
/// rate and rng (training only; pass 0 to disable).
struct EncodeOut {
    Var h;                      // N x d^(2)
    std::array<Var, 2> alphas;  // per-layer relation weights
};
EncodeOut encode(Tape& t, const NormalizedRelationSet& norm, const FeatureStore& fs,
                 const ParameterStore& params, bool force_materialize = false,
                 double dropout_rate = 0.0, std::mt19937_64* dropout_rng = nullptr);

/// Affine head + row softmax over two classes.
Var classify(Tape& t, Var h, const ParameterStore& params);

/// Predicted labels from an Nx2 probability matrix; ties break toward 0.
std::vector<int> predict_labels(const Matrix& probs);

/// Bilinear-diagonal link scores for one relation's parameter set.
Var score_links(Tape& t, Var embeddings, int relation, const ParameterStore& params,
                const std::vector<Edge>& pairs);

/// Hierarchical head: per-relation task embeddings E_r = H M_r, lambda from
/// the same attention rule over their pooled rows, classifier on the
/// lambda-combined embedding. Link task r scores from E_r.
struct HierarchicalOut {
    std::vector<Var> task_embeddings;  // R entries
    Var lambda;                        // 1 x R
    Var combined;                      // N x d
    Var probs;                         // N x 2
};
HierarchicalOut hierarchical_forward(Tape& t, Var h, const ParameterStore& params, int num_relations);

/// Relation-importance readout: lambda paired with relation names. Requires
/// hierarchical task maps in the store.
std::vector<std::pair<std::string, double>> lambda_readout(
    const NormalizedRelationSet& norm, const FeatureStore& fs, const ParameterStore& params,
    const std::vector<std::string>& relation_names);

}  // namespace timme

#endif  // TIMME_MODEL_HPP
