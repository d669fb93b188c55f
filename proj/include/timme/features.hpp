#ifndef TIMME_FEATURES_HPP
#define TIMME_FEATURES_HPP

#include "timme/graph.hpp"
#include "timme/param_store.hpp"
#include "timme/tape.hpp"

#include <string>
#include <vector>

namespace timme {

enum class FeatureMode { OneHot, Fixed, Mixed };

/// Initial node representation H^(0). One-hot mode never materializes the
/// identity; the encoder's first layer consumes the weights directly. In
/// mixed mode the rows of featureless nodes live in the ParameterStore and
/// receive gradients.
struct FeatureStore {
    FeatureMode mode{FeatureMode::OneHot};
    int dim{0};
    Matrix fixed;                  // N x dim; zero rows at featureless nodes
    std::vector<int> slot_of_row;  // -1 for featured, else trainable row slot
    int trainable_rows{0};

    static constexpr const char* kParamName = "features/trainable";
    bool one_hot() const { return mode == FeatureMode::OneHot; }
};

FeatureStore one_hot_features(int n);

/// Feature file: lines "node_id<TAB>f1,f2,...,f_dim" (comma-separated decimal
/// floats). Nodes absent from the file are featureless and become trainable
/// rows; a wrong vector length or unknown node id is an error naming the line.
/// Vectors are used as-is, no normalization.
FeatureStore load_feature_file(const std::string& path, const NodeIdMap& ids, int n, int dim);

/// Registers the trainable-row block (if any) in the store, initialized
/// uniformly in [-1/sqrt(dim), 1/sqrt(dim)].
void register_feature_parameters(const FeatureStore& fs, ParameterStore& params, std::mt19937_64& rng);

/// Records H^(0) on the tape. Row i is the fixed vector for featured i and
/// the current trainable row for featureless i. One-hot mode materializes an
/// explicit identity (used by tests and the equivalence check; the training
/// path never calls this in one-hot mode).
Var materialize(Tape& t, const FeatureStore& fs, const ParameterStore& params);

}  // namespace timme

#endif  // TIMME_FEATURES_HPP
